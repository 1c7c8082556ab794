//! Criterion benchmarks for the analytic engine, the planner and the simulator.

use std::hint::black_box;

use bdharq_core::{
    estimate_recovery_rate, optimize, recovery_rate_exact, recovery_rate_gaussian, NetworkState,
    QoeParams, SimMode, SystemParams, TransmissionPlan,
};
use criterion::Criterion;

pub fn benchmarks(c: &mut Criterion) {
    let net = NetworkState { p: 0.35, t_l: 1.0 };
    let sys = SystemParams::default();
    let qoe = QoeParams::default();
    let plan = TransmissionPlan::new(0.25, 2.0);

    c.bench_function("recovery_rate_gaussian", |b| {
        b.iter(|| recovery_rate_gaussian(black_box(&net), &sys, &plan).unwrap())
    });
    c.bench_function("recovery_rate_exact", |b| {
        b.iter(|| recovery_rate_exact(black_box(&net), &sys, &plan).unwrap())
    });
    c.bench_function("optimize_default_grid", |b| {
        b.iter(|| optimize(black_box(&net), &sys, &qoe).unwrap())
    });

    let mut group = c.benchmark_group("monte_carlo_10k");
    group.sample_size(10);
    for mode in [SimMode::Slot, SimMode::Timeline] {
        group.bench_function(mode.to_string(), |b| {
            b.iter(|| estimate_recovery_rate(mode, black_box(&net), &sys, &plan, 10_000, 42).unwrap())
        });
    }
    group.finish();
}
