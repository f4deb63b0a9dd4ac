use std::f64::consts::FRAC_PI_3;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use leggett_core::inequality::{self, AveragingMethod, EvaluateOptions};
use leggett_core::stats::run_experiment;
use leggett_core::{geom, Coupling, Execution, NlhvModel, Plane, QuantumSinglet, Schedule, SourceDistribution};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn label(e: Execution) -> &'static str {
    match e {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    }
}

fn experiment(c: &mut Criterion) {
    let (a, b) = geom::settings_in_plane(&Plane::xy(), FRAC_PI_3, 0.0);
    let model = NlhvModel::new(SourceDistribution::SingularUniform, Coupling::Independent);
    let n = 1_000_000;
    let mut group = c.benchmark_group("run_experiment");
    group.sample_size(10).throughput(Throughput::Elements(n));
    for exec in MODES {
        group.bench_with_input(BenchmarkId::new("nlhv", label(exec)), &exec, |bch, &exec| {
            bch.iter(|| run_experiment(&model, &a, &b, Schedule::Fixed { n }, 1, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("qm", label(exec)), &exec, |bch, &exec| {
            bch.iter(|| run_experiment(&QuantumSinglet, &a, &b, Schedule::Fixed { n }, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn plane_average(c: &mut Criterion) {
    let model = NlhvModel::new(SourceDistribution::SingularUniform, Coupling::AntiComonotone);
    let method = AveragingMethod::MonteCarlo { nodes: 16, samples_per_node: 20_000 };
    let mut group = c.benchmark_group("plane_averaged_correlation");
    group.sample_size(10);
    for exec in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(label(exec)), &exec, |bch, &exec| {
            bch.iter(|| inequality::plane_averaged_correlation(&model, &Plane::xy(), 1.0, method, 2, exec).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let alphas: Vec<f64> = (0..=18).map(|k| std::f64::consts::PI * k as f64 / 18.0).collect();
    let model = NlhvModel::new(SourceDistribution::SingularUniform, Coupling::Comonotone);
    let method = AveragingMethod::MonteCarlo { nodes: 8, samples_per_node: 10_000 };
    let mut group = c.benchmark_group("sweep_19_angles");
    group.sample_size(10);
    for exec in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(label(exec)), &exec, |bch, &exec| {
            bch.iter(|| {
                inequality::sweep(&model, &alphas, (Plane::xy(), Plane::xz()), method, EvaluateOptions::default(), 3, exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, experiment, plane_average, sweep);
criterion_main!(benches);
