//! Sequential vs rayon execution of the two embarrassingly parallel loops:
//! the λ sweep of one instance and the trials of a recovery experiment.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sparse_gsm::bench::config::{ExperimentSpec, Method};
use sparse_gsm::bench::recovery::{make_instance, run_recovery};
use sparse_gsm::optimizer::{solve_p0, HomotopyConfig, LambdaGrid};
use sparse_gsm::par::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn spec() -> ExperimentSpec {
    ExperimentSpec {
        trials: 4,
        n: 40,
        d: 120,
        k: vec![8],
        methods: vec![Method::Gsm2, Method::LsOmp],
        lambda_grid: LambdaGrid::Standard { len: 10, early_stop: 0 },
        ..Default::default()
    }
}

fn lambda_sweep(c: &mut Criterion) {
    let s = spec();
    let p = make_instance(&s, 8, 0).unwrap().problem;
    let cfg = HomotopyConfig::default();
    let mut g = c.benchmark_group("solve_p0");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| solve_p0(&p, &cfg, &s.lambda_grid, exec).unwrap())
        });
    }
    g.finish();
}

fn trials(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_recovery");
    g.sample_size(10);
    for (name, exec) in MODES {
        let s = ExperimentSpec { execution: exec, ..spec() };
        g.bench_function(name, |b| b.iter(|| run_recovery(&s).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, lambda_sweep, trials);
criterion_main!(benches);
