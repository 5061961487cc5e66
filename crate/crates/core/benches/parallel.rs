use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vcompat::compat::encode_image;
use vcompat::config::PipelineConfig;
use vcompat::elements::{mine_base_patterns, train_base_bank};
use vcompat::eval::generate_benchmark;
use vcompat::miner::{build_base_matrix, mine_frequent_with};
use vcompat::Exec;

fn bench(c: &mut Criterion) {
    let cfg = PipelineConfig::benchmark(7);
    let spec = cfg.synthetic_spec(cfg.synth.as_ref().unwrap()).unwrap();
    let b = generate_benchmark(&spec, 300, 10, 10, 7).unwrap();
    let class = "tops";
    let regions: Vec<_> = b
        .features
        .iter()
        .filter(|(id, _)| id.starts_with(class))
        .cloned()
        .collect();
    let params = cfg.base_params();
    let mut mining = params.mining.clone();
    mining.min_len = 1;
    let flat: Vec<_> = regions
        .iter()
        .flat_map(|(_, r)| r.iter().cloned())
        .collect();
    let db = build_base_matrix(&flat, params.k).unwrap();
    let patterns = mine_base_patterns(class, &regions, &params, &Exec::sequential()).unwrap();
    let bank = train_base_bank(
        &regions,
        &patterns,
        params.reg_scale,
        None,
        &Exec::sequential(),
    )
    .unwrap();

    let modes = [
        ("sequential", Exec::sequential()),
        ("parallel", Exec::parallel(0).unwrap()),
    ];
    let mut g = c.benchmark_group("mine");
    for (name, exec) in &modes {
        g.bench_with_input(BenchmarkId::from_parameter(name), exec, |bch, exec| {
            bch.iter(|| mine_frequent_with(&db, &mining, exec).unwrap())
        });
    }
    g.finish();
    let mut g = c.benchmark_group("train_base");
    for (name, exec) in &modes {
        g.bench_with_input(BenchmarkId::from_parameter(name), exec, |bch, exec| {
            bch.iter(|| train_base_bank(&regions, &patterns, params.reg_scale, None, exec).unwrap())
        });
    }
    g.finish();
    let mut g = c.benchmark_group("encode");
    for (name, exec) in &modes {
        g.bench_with_input(BenchmarkId::from_parameter(name), exec, |bch, exec| {
            bch.iter(|| {
                exec.try_map(&regions, |(_, r)| encode_image(r, bank.classifiers()))
                    .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
