use std::path::Path;
use std::process::{Command, Output};

fn vcompat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vcompat"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = vcompat(args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn synth(dir: &Path) -> String {
    let out = dir.to_str().unwrap().to_string();
    ok(&["synth", "--seed", "5", "--out", &out]);
    dir.join("config.toml").to_str().unwrap().to_string()
}

#[test]
fn score_before_train_top_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path());
    let o = vcompat(&["--config", &cfg, "score", "bottoms-0000", "tops-0000"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing model"));
}

#[test]
fn train_base_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path());
    ok(&["--config", &cfg, "mine-base", "tops"]);
    ok(&["--config", &cfg, "train-base", "tops"]);
    let first = std::fs::read(dir.path().join("base-tops.bank")).unwrap();
    ok(&["--config", &cfg, "--workers", "3", "train-base", "tops"]);
    assert_eq!(
        first,
        std::fs::read(dir.path().join("base-tops.bank")).unwrap()
    );
}

#[test]
fn synth_pipeline_is_deterministic() {
    let runs: Vec<String> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let cfg = synth(dir.path());
            ok(&["--config", &cfg, "all"])
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].contains("\nauc "));
}

#[test]
fn unknown_subcommand_and_bad_config() {
    assert!(!vcompat(&["frobnicate"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, "dim = 4\n[base]\nk = 9\n").unwrap();
    let o = vcompat(&["--config", cfg.to_str().unwrap(), "eval"]);
    assert!(!o.status.success());
}

#[test]
fn explain_and_recommend() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path());
    ok(&["--config", &cfg, "all"]);
    let json = ok(&[
        "--config",
        &cfg,
        "explain",
        "tops-0003",
        "bottoms-0007",
        "--top-n",
        "2",
    ]);
    assert!(json.contains("\"image_a\"") && json.contains("\"bottoms\""));
    let rec = ok(&[
        "--config",
        &cfg,
        "recommend",
        "tops-0003",
        "bottoms",
        "--top-n",
        "4",
    ]);
    assert_eq!(rec.lines().count(), 4);
}
