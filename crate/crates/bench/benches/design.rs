//! Timings for the pieces of one design run at the default scale.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use isacsec::metrics::{self, MetricsReport};
use isacsec::optimizer::{build_subproblem, init_sca, is_feasible};
use isacsec::scenario::draw_channels;
use isacsec::{run_secure_design, DesignOptions, SolverSettings, SystemConfig};

fn metrics_bench(c: &mut Criterion) {
    let cfg = SystemConfig::default_profile();
    let ch = draw_channels(&cfg, &mut cfg.rng()).unwrap();
    let sol = run_secure_design(&ch, &cfg).unwrap();
    let grid = metrics::default_grid();
    c.bench_function("metrics/report", |b| {
        b.iter(|| MetricsReport::evaluate(black_box(&sol), &ch, &cfg))
    });
    c.bench_function("metrics/beam_pattern", |b| {
        b.iter(|| metrics::beam_pattern(black_box(&sol), &ch, &cfg, &grid).unwrap())
    });
}

fn solver_bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    for n_t in [8, 12] {
        let cfg = SystemConfig {
            n_t,
            ..SystemConfig::default_profile()
        };
        let ch = draw_channels(&cfg, &mut cfg.rng()).unwrap();
        let state = init_sca(&ch, &cfg);
        g.bench_function(format!("build_subproblem/n_t={n_t}"), |b| {
            b.iter(|| build_subproblem(black_box(&state), &ch, &cfg).unwrap())
        });
        let sub = build_subproblem(&state, &ch, &cfg).unwrap();
        let settings = SolverSettings::with_tol(cfg.solver_tol);
        g.bench_function(format!("solve_subproblem/n_t={n_t}"), |b| {
            b.iter(|| sub.program.solve(&settings).unwrap())
        });
        g.bench_function(format!("feasibility/n_t={n_t}"), |b| {
            b.iter(|| is_feasible(&ch, &cfg, &DesignOptions::default()).unwrap())
        });
        g.bench_function(format!("full_design/n_t={n_t}"), |b| {
            b.iter(|| run_secure_design(&ch, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, metrics_bench, solver_bench);
criterion_main!(benches);
