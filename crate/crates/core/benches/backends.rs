use std::hint::black_box;

use chronicle::estimators::{decompose_many, estimate_trend_with, EstimatorConfig};
use chronicle::portfolio::{run_backtest_with, sharpe_partials_with, PortfolioState, RebalancePolicy};
use chronicle::series::Chronicle;
use chronicle::{synth, Backend};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const BACKENDS: [(&str, Backend); 2] = [("sequential", Backend::Sequential), ("parallel", Backend::Parallel)];

fn trend(c: &mut Criterion) {
    let x = Chronicle::from_values("gold", &synth::gold_like(200_000, 1)).unwrap();
    let cfg = EstimatorConfig::centered(100, 1.0).unwrap();
    let mut g = c.benchmark_group("estimate_trend_200k");
    for (name, backend) in BACKENDS {
        g.bench_function(name, |b| b.iter(|| estimate_trend_with(black_box(&x), &cfg, backend).unwrap()));
    }
    g.finish();
}

fn partials(c: &mut Criterion) {
    let policy = RebalancePolicy::default();
    let mut g = c.benchmark_group("sharpe_partials");
    g.sample_size(20);
    for legs in [10, 152] {
        let panel = synth::random_panel(600, legs, 2).unwrap();
        let t = panel.len() - 1;
        let state = PortfolioState::new(vec![1.0; legs], panel.row(t), t).unwrap();
        for (name, backend) in BACKENDS {
            g.bench_with_input(BenchmarkId::new(name, legs), &state, |b, s| {
                b.iter(|| sharpe_partials_with(s, &panel, &policy, backend).unwrap())
            });
        }
    }
    g.finish();
}

fn backtest(c: &mut Criterion) {
    let panel = synth::random_panel(2000, 10, 3).unwrap();
    let policy = RebalancePolicy::default();
    let mut g = c.benchmark_group("backtest_2000x10");
    g.sample_size(10);
    for (name, backend) in BACKENDS {
        g.bench_function(name, |b| b.iter(|| run_backtest_with(&panel, &policy, 1.0, backend).unwrap()));
    }
    g.finish();
}

fn decomposition(c: &mut Criterion) {
    let series: Vec<Chronicle> = (0..38)
        .map(|k| Chronicle::from_values(format!("s{k}"), &synth::gold_like(5000, k)).unwrap())
        .collect();
    let cfg = EstimatorConfig::centered(100, 1.0).unwrap();
    let mut g = c.benchmark_group("decompose_38x5000");
    for (name, backend) in BACKENDS {
        g.bench_function(name, |b| b.iter(|| decompose_many(black_box(&series), &cfg, backend)));
    }
    g.finish();
}

criterion_group!(benches, trend, partials, backtest, decomposition);
criterion_main!(benches);
