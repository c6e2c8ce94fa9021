use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rcp_core::renewal::{generate_track, integrated_tail_m, inverse_integrated_tail, InterarrivalLaw};
use rcp_core::renorm::{default_r0_grid, default_theta_geo, find_r0, run_recurrence, StartRule};
use rcp_core::seed::{rng_for, tag};

fn tails(c: &mut Criterion) {
    let law = InterarrivalLaw::example_log_sv(20.0).unwrap();
    c.bench_function("integrated_tail_m/log_sv", |b| b.iter(|| integrated_tail_m(&law, black_box(1e8)).unwrap()));
    let y = integrated_tail_m(&law, 1e6).unwrap();
    c.bench_function("inverse_integrated_tail/log_sv", |b| {
        b.iter(|| inverse_integrated_tail(&law, black_box(y)).unwrap())
    });
    let pareto = InterarrivalLaw::pareto_tail(0.7, 1.0).unwrap();
    c.bench_function("generate_track/pareto_1e4", |b| {
        b.iter(|| generate_track(&pareto, 0.0, 1e4, &mut rng_for(black_box(1), tag::CURE, &[0])).unwrap())
    });
}

fn renorm(c: &mut Criterion) {
    c.bench_function("run_recurrence/d1", |b| {
        b.iter(|| run_recurrence(1, black_box(2.5), 200.0, 50, StartRule::AsStated).unwrap())
    });
    let grid = default_r0_grid();
    c.bench_function("find_r0/depth200", |b| {
        b.iter(|| find_r0(black_box(0.5), 1.0, 0.5, default_theta_geo(0.5), 200, &grid).unwrap())
    });
}

criterion_group!(benches, tails, renorm);
criterion_main!(benches);
