use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rcp_bench::{line_box, pareto};
use rcp_core::paths::{detect_spatial_crossing, detect_temporal_crossing, run_survival};
use rcp_core::{build_sample, evolve, Configuration, SeedSpec};

fn build(c: &mut Criterion) {
    let law = pareto();
    let mut g = c.benchmark_group("build_sample");
    for half in [16i64, 64, 256] {
        let b = line_box(half, 50.0);
        g.bench_with_input(BenchmarkId::from_parameter(half), &b, |bench, b| {
            bench.iter(|| build_sample(b, 1.5, &law, SeedSpec::new(black_box(7))).unwrap())
        });
    }
    g.finish();
}

fn engine(c: &mut Criterion) {
    let law = pareto();
    let b = line_box(64, 50.0);
    let sample = build_sample(&b, 1.5, &law, SeedSpec::new(3)).unwrap();
    let origin = Configuration::from_sites(&b, &[vec![0]]).unwrap();
    let full = Configuration::full(b.num_sites());
    c.bench_function("evolve/origin", |bench| bench.iter(|| evolve(&sample, &origin, 50.0).unwrap()));
    c.bench_function("run_survival/full", |bench| bench.iter(|| run_survival(&sample, &full, 50.0).unwrap()));
    c.bench_function("crossing/temporal", |bench| bench.iter(|| detect_temporal_crossing(&sample, &b, false).unwrap()));
    c.bench_function("crossing/spatial", |bench| {
        bench.iter(|| detect_spatial_crossing(&sample, &b, 0, false).unwrap())
    });
}

criterion_group!(benches, build, engine);
criterion_main!(benches);
