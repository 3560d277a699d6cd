use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use meanflow_bench::forced_config;
use meanflow_core::spectral::nonlinear_term;
use meanflow_core::{Solver, TimeAverager};

const CASES: [(usize, usize); 3] = [(2, 64), (2, 128), (3, 32)];

fn nonlinear(c: &mut Criterion) {
    let mut group = c.benchmark_group("nonlinear_term");
    for (dim, n) in CASES {
        let v = forced_config(dim, n).initial;
        group.bench_function(BenchmarkId::from_parameter(format!("{dim}d_{n}")), |b| b.iter(|| nonlinear_term(&v)));
    }
    group.finish();
}

fn solver_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver_step");
    for (dim, n) in CASES {
        let mut solver = Solver::new(forced_config(dim, n)).unwrap();
        let mut state = solver.initial_state();
        group.bench_function(BenchmarkId::from_parameter(format!("{dim}d_{n}")), |b| {
            b.iter(|| solver.step(&mut state, &mut ()).unwrap())
        });
    }
    group.finish();
}

fn averaged_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("averaged_step");
    for (dim, n) in CASES {
        let config = forced_config(dim, n);
        let mut averager = TimeAverager::new(&config.grid);
        let mut solver = Solver::new(config).unwrap();
        let mut state = solver.initial_state();
        group.bench_function(BenchmarkId::from_parameter(format!("{dim}d_{n}")), |b| {
            b.iter(|| solver.step(&mut state, &mut averager).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(20);
    targets = nonlinear, solver_step, averaged_step
}
criterion_main!(kernels);
