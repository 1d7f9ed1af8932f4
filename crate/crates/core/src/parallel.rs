//! Batch helpers. With the `parallel` feature (default) work items are
//! spread over the rayon pool; without it they run in order on the caller.
//! Both paths return results in input order.

use std::collections::BTreeMap;

use crate::aggregation::{evaluate_graph, DiagnosticGraph, EvaluationSnapshot};
use crate::config::GraphConfig;
use crate::simulator::{run, RunError, RunResult, ScenarioScript};
use crate::system_state::VehicleState;
use crate::{DiagnosticStatus, NamePath};

pub fn seq_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    seq_map(items, f)
}

/// Runs independent scenarios against one config.
pub fn run_batch(scenarios: &[ScenarioScript], config: &GraphConfig) -> Vec<Result<RunResult, RunError>> {
    par_map(scenarios, |s| run(s, config))
}

pub fn run_batch_sequential(scenarios: &[ScenarioScript], config: &GraphConfig) -> Vec<Result<RunResult, RunError>> {
    seq_map(scenarios, |s| run(s, config))
}

/// One evaluation input: leaf statuses, vehicle state and time.
pub type EvalInput = (BTreeMap<NamePath, DiagnosticStatus>, VehicleState, u64);

pub fn evaluate_batch(graph: &DiagnosticGraph, inputs: &[EvalInput]) -> Vec<EvaluationSnapshot> {
    par_map(inputs, |(statuses, state, now)| evaluate_graph(graph, statuses, *state, *now))
}

pub fn evaluate_batch_sequential(graph: &DiagnosticGraph, inputs: &[EvalInput]) -> Vec<EvaluationSnapshot> {
    seq_map(inputs, |(statuses, state, now)| evaluate_graph(graph, statuses, *state, *now))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::builtin_scenarios;

    #[test]
    fn maps_preserve_order() {
        let items: Vec<u64> = (0..1000).collect();
        assert_eq!(par_map(&items, |x| x * 2), seq_map(&items, |x| x * 2));
    }

    #[test]
    fn batch_equals_sequential() {
        let cfg = GraphConfig::reference();
        let scenarios = builtin_scenarios();
        let a: Vec<_> = run_batch(&scenarios, &cfg).into_iter().map(|r| r.unwrap().timeline).collect();
        let b: Vec<_> = run_batch_sequential(&scenarios, &cfg)
            .into_iter()
            .map(|r| r.unwrap().timeline)
            .collect();
        assert_eq!(a, b);
    }
}
