use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use filtsps::correlators::CorrelatorEngine;
use filtsps::metrics::{self, IntegrationConfig, PathSelector};
use filtsps::sweep::{run_sweep, Axis, Param, PointParams, SweepGrid};
use filtsps::{FilterSpec, Metric, RateSet};

fn point() -> (RateSet, FilterSpec) {
    (RateSet::new(1.0, 10.0, 0.5).unwrap(), FilterSpec::new(1.0).unwrap())
}

fn correlators(c: &mut Criterion) {
    let (rates, _) = point();
    let engine = CorrelatorEngine::new(&rates);
    let mut g = c.benchmark_group("correlator");
    g.bench_function("two_time", |b| b.iter(|| engine.two_time(black_box(0.2), black_box(1.3)).unwrap()));
    g.bench_function("four_time_in_pulse", |b| {
        b.iter(|| engine.four_time(black_box(0.1), 0.2, 0.3, 0.4).unwrap())
    });
    g.bench_function("four_time_straddling", |b| {
        b.iter(|| engine.four_time(black_box(0.1), 0.7, 0.3, 2.4).unwrap())
    });
    g.finish();
}

fn metric_paths(c: &mut Criterion) {
    let (rates, filter) = point();
    for path in [PathSelector::SemiAnalytic, PathSelector::Quadrature] {
        let cfg = IntegrationConfig::default().with_path(path);
        let mut g = c.benchmark_group(format!("metric/{path:?}"));
        g.sample_size(20);
        g.bench_function("ind", |b| b.iter(|| metrics::indistinguishability(&rates, &filter, &cfg).unwrap()));
        g.bench_function("g2T", |b| b.iter(|| metrics::g2_filtered_at_t(&rates, &filter, &cfg).unwrap()));
        g.bench_function("g2inf", |b| b.iter(|| metrics::g2_infinity(&rates, &cfg).unwrap()));
        g.bench_function("qy", |b| b.iter(|| metrics::qy_ratio(&rates, &filter, &cfg).unwrap()));
        g.finish();
    }
}

fn window(c: &mut Criterion) {
    let (rates, filter) = point();
    let cfg = IntegrationConfig::default();
    let mut g = c.benchmark_group("window");
    g.sample_size(20);
    for tau in [1.0, 3.0, 10.0] {
        g.bench_with_input(BenchmarkId::from_parameter(tau), &tau, |b, &tau| {
            b.iter(|| metrics::g2_detector_window(0.0, tau, &rates, &filter, &cfg).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let grid = SweepGrid {
        axes: vec![Axis::log(Param::PulseT, 0.01, 100.0, 8), Axis::log(Param::GammaF, 0.01, 100.0, 8)],
        fixed: PointParams { gamma_pump: 5.0, gamma_deph: 10.0, ..PointParams::default() },
        metrics: Metric::ALL.to_vec(),
        config: IntegrationConfig::default(),
    };
    let mut g = c.benchmark_group("sweep_8x8");
    g.sample_size(10);
    for workers in [1, 4] {
        g.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter(|| run_sweep(&grid, w).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, correlators, metric_paths, window, sweep);
criterion_main!(benches);
