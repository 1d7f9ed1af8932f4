use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::graph::DiagnosticGraph;
use crate::state::severity_max;
use crate::system_state::{gate_open, VehicleState};
use crate::{DiagnosticState, DiagnosticStatus, NamePath};

/// Why a node's effective state differs (or not) from its own state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Nominal,
    Gated,
    UpstreamError,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Nominal => "nominal",
            Reason::Gated => "gated",
            Reason::UpstreamError => "upstream_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub ok: u32,
    pub total: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub name: NamePath,
    pub own_state: DiagnosticState,
    pub effective_state: DiagnosticState,
    pub reason: Reason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub depends_on: Vec<NamePath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tally: Option<Tally>,
}

/// Effective state of every node at one evaluation instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSnapshot {
    pub tick_ms: u64,
    pub vehicle_state: VehicleState,
    /// Groups in declaration order.
    pub groups: Vec<NodeRecord>,
    /// Leaves in declaration order.
    pub leaves: Vec<NodeRecord>,
    pub root_causes: BTreeSet<NamePath>,
}

impl EvaluationSnapshot {
    pub fn group(&self, name: &NamePath) -> Option<&NodeRecord> {
        self.groups.iter().find(|n| &n.name == name)
    }

    pub fn leaf(&self, name: &NamePath) -> Option<&NodeRecord> {
        self.leaves.iter().find(|n| &n.name == name)
    }

    pub fn node(&self, name: &NamePath) -> Option<&NodeRecord> {
        self.group(name).or_else(|| self.leaf(name))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.groups.iter().chain(self.leaves.iter())
    }
}

/// OR-aggregation of member states. IGNORE members are excluded; with
/// nothing left the group is UNKNOWN.
pub fn aggregate_group<I>(members: I) -> DiagnosticState
where
    I: IntoIterator<Item = DiagnosticState>,
{
    members
        .into_iter()
        .filter(|s| *s != DiagnosticState::Ignore)
        .reduce(|a, b| severity_max(a, b).expect("IGNORE filtered out"))
        .unwrap_or(DiagnosticState::Unknown)
}

/// Leaf status after applying the staleness timeout.
fn leaf_state(status: Option<&DiagnosticStatus>, stale_after_ms: u64, now_ms: u64) -> DiagnosticState {
    match status {
        Some(s) if now_ms.saturating_sub(s.timestamp_ms) <= stale_after_ms => s.state,
        _ => DiagnosticState::Unknown,
    }
}

/// Evaluates every group in dependency order.
///
/// For each group: a closed gate yields IGNORE (gated); otherwise an ERROR
/// anywhere among its transitive dependencies yields IGNORE
/// (upstream_error); otherwise the group reports the aggregate of its
/// members. Leaves of a gated group are forced to IGNORE as well.
pub fn evaluate_graph(
    graph: &DiagnosticGraph,
    statuses: &BTreeMap<NamePath, DiagnosticStatus>,
    vehicle_state: VehicleState,
    now_ms: u64,
) -> EvaluationSnapshot {
    let leaf_own: Vec<DiagnosticState> = graph
        .leaves
        .iter()
        .map(|l| leaf_state(statuses.get(&l.name), l.stale_after_ms, now_ms))
        .collect();

    let n = graph.groups.len();
    let mut own = vec![DiagnosticState::Unknown; n];
    let mut effective = vec![DiagnosticState::Unknown; n];
    let mut reason = vec![Reason::Nominal; n];
    for &g in &graph.topo {
        let group = &graph.groups[g];
        own[g] = aggregate_group(group.members.iter().map(|&l| leaf_own[l]));
        let gated = group.spec.gate.as_deref().is_some_and(|gate| {
            !gate_open(&graph.gates, gate, vehicle_state).expect("gates validated")
        });
        if gated {
            effective[g] = DiagnosticState::Ignore;
            reason[g] = Reason::Gated;
        } else if group.ancestors.iter().any(|&a| effective[a] == DiagnosticState::Error) {
            effective[g] = DiagnosticState::Ignore;
            reason[g] = Reason::UpstreamError;
        } else {
            effective[g] = own[g];
        }
    }

    let groups = graph
        .groups
        .iter()
        .enumerate()
        .map(|(g, group)| NodeRecord {
            name: group.spec.name.clone(),
            own_state: own[g],
            effective_state: effective[g],
            reason: reason[g],
            label: group.spec.label.clone(),
            depends_on: group.spec.depends_on.clone(),
            tally: Some(Tally {
                ok: group
                    .members
                    .iter()
                    .filter(|&&l| leaf_own[l] == DiagnosticState::Ok)
                    .count() as u32,
                total: group.members.len() as u32,
            }),
        })
        .collect();

    let leaves = graph
        .leaves
        .iter()
        .enumerate()
        .map(|(l, leaf)| {
            let gated = leaf.groups.iter().any(|&g| reason[g] == Reason::Gated);
            NodeRecord {
                name: leaf.name.clone(),
                own_state: leaf_own[l],
                effective_state: if gated { DiagnosticState::Ignore } else { leaf_own[l] },
                reason: if gated { Reason::Gated } else { Reason::Nominal },
                label: None,
                depends_on: Vec::new(),
                tally: None,
            }
        })
        .collect();

    let mut snapshot = EvaluationSnapshot {
        tick_ms: now_ms,
        vehicle_state,
        groups,
        leaves,
        root_causes: BTreeSet::new(),
    };
    snapshot.root_causes = root_causes(&snapshot, graph);
    snapshot
}

/// ERROR groups none of whose transitive dependencies is in ERROR.
pub fn root_causes(snapshot: &EvaluationSnapshot, graph: &DiagnosticGraph) -> BTreeSet<NamePath> {
    let is_error = |name: &NamePath| {
        snapshot
            .group(name)
            .is_some_and(|n| n.effective_state == DiagnosticState::Error)
    };
    graph
        .groups
        .iter()
        .filter(|g| is_error(&g.spec.name))
        .filter(|g| !g.ancestors.iter().any(|&a| is_error(&graph.groups[a].spec.name)))
        .map(|g| g.spec.name.clone())
        .collect()
}
