//! Diagnostic graph construction and per-tick evaluation: OR-aggregation
//! of member leaves, dependency-driven IGNORE propagation, state gating
//! and root-cause extraction.

mod evaluate;
mod graph;

pub use evaluate::{aggregate_group, evaluate_graph, root_causes, EvaluationSnapshot, NodeRecord, Reason, Tally};
pub use graph::{
    match_members, validate_graph, validate_structure, DiagnosticGraph, Finding, FindingKind, FindingSeverity,
    GroupSpec, LeafDecl, MemberRule,
};
