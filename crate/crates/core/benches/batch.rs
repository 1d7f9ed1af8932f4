use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use modiag::config::GraphConfig;
use modiag::parallel::{evaluate_batch, evaluate_batch_sequential, run_batch, run_batch_sequential, EvalInput};
use modiag::simulator::builtin_scenarios;
use modiag::system_state::VehicleState;
use modiag::{DiagnosticGraph, DiagnosticState, DiagnosticStatus};

fn scenarios(c: &mut Criterion) {
    let cfg = GraphConfig::reference();
    let mut group = c.benchmark_group("scenario_batch");
    group.sample_size(10);
    for copies in [1usize, 4] {
        let batch: Vec<_> = (0..copies).flat_map(|_| builtin_scenarios()).collect();
        group.bench_with_input(BenchmarkId::new("parallel", batch.len()), &batch, |b, batch| {
            b.iter(|| run_batch(black_box(batch), &cfg))
        });
        group.bench_with_input(BenchmarkId::new("sequential", batch.len()), &batch, |b, batch| {
            b.iter(|| run_batch_sequential(black_box(batch), &cfg))
        });
    }
    group.finish();
}

fn evaluations(c: &mut Criterion) {
    let cfg = GraphConfig::reference();
    let graph = DiagnosticGraph::from_config(&cfg).unwrap();
    let leaves: Vec<_> = graph.leaf_names().cloned().collect();
    let inputs: Vec<EvalInput> = (0..4096u64)
        .map(|i| {
            let statuses: BTreeMap<_, _> = leaves
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let state = DiagnosticState::SEVERITY_ORDER[((i >> j) & 3) as usize];
                    (name.clone(), DiagnosticStatus::new(name.clone(), state, i * 100))
                })
                .collect();
            (statuses, VehicleState::ALL[(i % 4) as usize], i * 100)
        })
        .collect();
    let mut group = c.benchmark_group("evaluate_batch");
    group.bench_function("parallel", |b| b.iter(|| evaluate_batch(&graph, black_box(&inputs))));
    group.bench_function("sequential", |b| b.iter(|| evaluate_batch_sequential(&graph, black_box(&inputs))));
    group.finish();
}

criterion_group!(benches, scenarios, evaluations);
criterion_main!(benches);
