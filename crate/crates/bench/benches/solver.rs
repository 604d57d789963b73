use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use suhnpf_core::problem::BenchmarkId;
use suhnpf_core::solver::{self, SolverConfig};
use suhnpf_core::{label_batch, ManifoldClassifier};

fn training(c: &mut Criterion) {
    let case = BenchmarkId::CaseI.build();
    let pts = case.problem.sample_feasible(100, 3).unwrap();
    let batch = label_batch(&case.problem, &pts.points, 1e-1, false).unwrap();
    let net = ManifoldClassifier::new(2, &[64, 64], 0).unwrap();
    c.bench_function("train/100_steps", |b| {
        b.iter(|| {
            let mut n = net.clone();
            n.train(black_box(&batch), 2, 50, 0.0).unwrap()
        })
    });
}

fn solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for id in [BenchmarkId::Quad, BenchmarkId::CaseI] {
        let case = id.build();
        let cfg = SolverConfig {
            final_training_rounds: 0,
            ..SolverConfig::default()
        };
        group.bench_function(id.as_str(), |b| {
            b.iter(|| {
                solver::solve(black_box(&case), &cfg)
                    .unwrap()
                    .report
                    .front
                    .len()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, training, solves);
criterion_main!(benches);
