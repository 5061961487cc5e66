use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use vcompat::config::PipelineConfig;
use vcompat::pipeline::Workspace;

/// Mine mid-level visual elements and score visual compatibility.
#[derive(Parser)]
#[command(name = "vcompat", version)]
struct Cli {
    /// Pipeline config (TOML). Optional for `synth`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Never changes outputs.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory (default: next to the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine base-level patterns for one class.
    MineBase { class: String },
    /// Train the base-level classifier bank for one class.
    TrainBase { class: String },
    /// Encode every image over its class bank.
    Encode {
        #[arg(long)]
        class: Option<String>,
    },
    /// Mine top-level rules for a class pair.
    MineTop { class_a: String, class_b: String },
    /// Train top-level classifiers for a class pair.
    TrainTop { class_a: String, class_b: String },
    /// Compatibility score of two items.
    Score { item_a: String, item_b: String },
    /// Elements and regions behind a pair's score, as JSON.
    Explain {
        item_a: String,
        item_b: String,
        #[arg(long, default_value_t = 3)]
        top_n: usize,
    },
    /// Rank items of a class as partners for an item.
    Recommend {
        item: String,
        class: String,
        #[arg(long, default_value_t = 10)]
        top_n: usize,
    },
    /// AUC on the test pairs.
    Eval,
    /// Write a planted synthetic corpus and its config.
    Synth,
    /// Every stage, then eval.
    All,
}

const DEFAULT_CONFIG: &str = "config.toml";

fn load_config(cli: &Cli, synth: bool) -> Result<(PipelineConfig, PathBuf)> {
    let path = cli
        .config
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG));
    let mut config = if synth && cli.config.is_none() && !path.exists() {
        PipelineConfig::benchmark(cli.seed.unwrap_or(0))
    } else {
        PipelineConfig::load(&path).with_context(|| format!("loading config {}", path.display()))?
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(w) = cli.workers {
        config.workers = w;
    }
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((config, root))
}

fn run(cli: Cli) -> Result<()> {
    let synth = matches!(cli.command, Command::Synth);
    let (config, root) = load_config(&cli, synth)?;
    let out = cli.out.clone().unwrap_or_else(|| root.clone());
    let ws = Workspace::new(config, root, out)?;
    match &cli.command {
        Command::MineBase { class } => println!("{}", ws.mine_base(class)?.display()),
        Command::TrainBase { class } => println!("{}", ws.train_base(class)?.display()),
        Command::Encode { class } => {
            for p in ws.encode(class.as_deref())? {
                println!("{}", p.display());
            }
        }
        Command::MineTop { class_a, class_b } => {
            println!("{}", ws.mine_top(class_a, class_b)?.display())
        }
        Command::TrainTop { class_a, class_b } => {
            println!("{}", ws.train_top(class_a, class_b)?.display())
        }
        Command::Score { item_a, item_b } => {
            let (s, (a, b)) = ws.score(item_a, item_b)?;
            println!(
                "score {} winner {} classes {a} {b}",
                s.score, s.winning_element
            );
        }
        Command::Explain {
            item_a,
            item_b,
            top_n,
        } => {
            println!("{}", ws.explain(item_a, item_b, *top_n)?.to_json())
        }
        Command::Recommend { item, class, top_n } => {
            for (id, s) in ws.recommend(item, class, *top_n)? {
                println!("{id} {s}");
            }
        }
        Command::Eval => print!("{}", ws.eval()?.to_text()),
        Command::Synth => {
            let b = ws.synth()?;
            println!(
                "{} items, {} train pairs, {} test pairs -> {}",
                b.catalog.len(),
                b.split.train_pairs.len(),
                b.split.test_pairs.len(),
                ws.out.join("config.toml").display()
            );
        }
        Command::All => print!("{}", ws.run_all()?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
