use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::aggregation::{EvaluationSnapshot, NodeRecord};
use crate::countermeasures::Action;
use crate::system_state::Transition;
use crate::{DiagnosticState, NamePath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub tick_ms: u64,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateChangeRecord {
    pub tick_ms: u64,
    pub transition: Transition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub tick_ms: u64,
    pub label: String,
    /// File name only, so timelines do not depend on the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub entries: usize,
    pub span_ms: u64,
    pub debounced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Notice {
    pub tick_ms: u64,
    pub message: String,
}

/// Everything a run produced, in tick order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub scenario: String,
    pub snapshots: Vec<EvaluationSnapshot>,
    pub actions: Vec<ActionRecord>,
    pub state_changes: Vec<StateChangeRecord>,
    pub incidents: Vec<IncidentRecord>,
    pub notices: Vec<Notice>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    tick_ms: u64,
    node: &'a NamePath,
    own_state: DiagnosticState,
    effective_state: DiagnosticState,
    reason: &'static str,
}

impl Timeline {
    pub fn new(scenario: impl Into<String>) -> Self {
        Timeline {
            scenario: scenario.into(),
            ..Timeline::default()
        }
    }

    /// One row per node per tick: `tick_ms,node,own_state,effective_state,reason`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for snap in &self.snapshots {
            for node in snap.nodes() {
                w.serialize(CsvRow {
                    tick_ms: snap.tick_ms,
                    node: &node.name,
                    own_state: node.own_state,
                    effective_state: node.effective_state,
                    reason: node.reason.as_str(),
                })
                .expect("in-memory csv write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("timeline serializes");
        s.push('\n');
        s
    }

    /// `(tick, record)` for `node` on every tick it appears.
    pub fn track<'a>(&'a self, node: &'a NamePath) -> impl Iterator<Item = (u64, &'a NodeRecord)> + 'a {
        self.snapshots
            .iter()
            .filter_map(move |s| s.node(node).map(|n| (s.tick_ms, n)))
    }

    /// First tick at which `node`'s effective state is `state`.
    pub fn first_tick(&self, node: &NamePath, state: DiagnosticState) -> Option<u64> {
        self.track(node).find(|(_, n)| n.effective_state == state).map(|(t, _)| t)
    }

    /// First tick at or after `from_ms` at which `node`'s own state is `state`.
    pub fn first_own_tick(&self, node: &NamePath, state: DiagnosticState, from_ms: u64) -> Option<u64> {
        self.track(node)
            .find(|(t, n)| *t >= from_ms && n.own_state == state)
            .map(|(t, _)| t)
    }

    /// Groups whose effective state was `state` on at least one tick.
    pub fn groups_ever_in(&self, state: DiagnosticState) -> BTreeSet<NamePath> {
        self.snapshots
            .iter()
            .flat_map(|s| s.groups.iter())
            .filter(|n| n.effective_state == state)
            .map(|n| n.name.clone())
            .collect()
    }
}
