use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::config::{EvaluationConfig, GraphConfig};
use crate::system_state::GatingTable;
use crate::NamePath;

/// How a group selects its member leaves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberRule {
    /// Every leaf at or below this namespace.
    Prefix(NamePath),
    /// Regular expression that must match the whole canonical leaf name.
    Regex(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: NamePath,
    /// Display name, e.g. "Sensors".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub members: Vec<MemberRule>,
    #[serde(default)]
    pub depends_on: Vec<NamePath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<String>,
}

/// A declared leaf: a monitor name plus its staleness timeout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafDecl {
    pub name: NamePath,
    pub stale_after_ms: Option<u64>,
}

impl LeafDecl {
    pub fn new(name: NamePath) -> Self {
        LeafDecl {
            name,
            stale_after_ms: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingSeverity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum FindingKind {
    DuplicateName { name: NamePath },
    Cycle { path: Vec<NamePath> },
    DanglingDependency { group: NamePath, target: NamePath },
    UnknownGate { group: NamePath, gate: String },
    InvalidRegex { group: NamePath, pattern: String, reason: String },
    EmptyMembers { group: NamePath },
    OrphanLeaf { leaf: NamePath },
    InvalidMonitor { name: NamePath, reason: String },
    UnknownVitalGroup { group: NamePath },
    InvalidPolicy { reason: String },
    InvalidEvaluation { reason: String },
    InvalidStub { name: NamePath, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: FindingSeverity,
    #[serde(flatten)]
    pub kind: FindingKind,
}

impl Finding {
    pub fn error(kind: FindingKind) -> Self {
        Finding {
            severity: FindingSeverity::Error,
            kind,
        }
    }

    pub fn warning(kind: FindingKind) -> Self {
        Finding {
            severity: FindingSeverity::Warning,
            kind,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == FindingSeverity::Error
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            FindingSeverity::Error => "error",
            FindingSeverity::Warning => "warning",
        };
        write!(f, "{level}: ")?;
        match &self.kind {
            FindingKind::DuplicateName { name } => write!(f, "duplicate name {name}"),
            FindingKind::Cycle { path } => {
                let names: Vec<String> = path.iter().map(ToString::to_string).collect();
                write!(f, "dependency cycle {} -> {}", names.join(" -> "), names[0])
            }
            FindingKind::DanglingDependency { group, target } => {
                write!(f, "group {group} depends on missing group {target}")
            }
            FindingKind::UnknownGate { group, gate } => {
                write!(f, "group {group} references unknown gate `{gate}`")
            }
            FindingKind::InvalidRegex {
                group,
                pattern,
                reason,
            } => write!(f, "group {group}: invalid regex `{pattern}`: {reason}"),
            FindingKind::EmptyMembers { group } => write!(f, "group {group} has no member rules"),
            FindingKind::OrphanLeaf { leaf } => write!(f, "leaf {leaf} is not matched by any group"),
            FindingKind::InvalidMonitor { name, reason } => write!(f, "monitor {name}: {reason}"),
            FindingKind::UnknownVitalGroup { group } => {
                write!(f, "vital group {group} is not a declared group")
            }
            FindingKind::InvalidPolicy { reason } => write!(f, "countermeasures: {reason}"),
            FindingKind::InvalidEvaluation { reason } => write!(f, "evaluation: {reason}"),
            FindingKind::InvalidStub { name, reason } => write!(f, "stub {name}: {reason}"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum CompiledRule {
    Prefix(NamePath),
    Regex(Regex),
}

impl CompiledRule {
    fn compile(rule: &MemberRule) -> Result<Self, regex::Error> {
        Ok(match rule {
            MemberRule::Prefix(p) => CompiledRule::Prefix(p.clone()),
            MemberRule::Regex(r) => CompiledRule::Regex(Regex::new(&format!("^(?:{r})$"))?),
        })
    }

    fn matches(&self, leaf: &NamePath) -> bool {
        match self {
            CompiledRule::Prefix(p) => leaf.starts_with(p),
            CompiledRule::Regex(r) => r.is_match(&leaf.to_string()),
        }
    }
}

/// Does `group` claim `leaf` as a member? Regex errors surface here, but a
/// compiled [`DiagnosticGraph`] never holds an invalid pattern.
pub fn match_members(group: &GroupSpec, leaf: &NamePath) -> Result<bool, regex::Error> {
    for rule in &group.members {
        if CompiledRule::compile(rule)?.matches(leaf) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Checks the structural invariants of groups, leaves and gates.
pub fn validate_structure(groups: &[GroupSpec], leaves: &[LeafDecl], gates: &GatingTable) -> Vec<Finding> {
    let mut findings = Vec::new();

    let mut seen = BTreeSet::new();
    for name in groups.iter().map(|g| &g.name).chain(leaves.iter().map(|l| &l.name)) {
        if !seen.insert(name) {
            findings.push(Finding::error(FindingKind::DuplicateName { name: name.clone() }));
        }
    }

    let mut compiled: Vec<Vec<CompiledRule>> = Vec::with_capacity(groups.len());
    for group in groups {
        if group.members.is_empty() {
            findings.push(Finding::error(FindingKind::EmptyMembers {
                group: group.name.clone(),
            }));
        }
        let mut rules = Vec::new();
        for rule in &group.members {
            match CompiledRule::compile(rule) {
                Ok(r) => rules.push(r),
                Err(e) => findings.push(Finding::error(FindingKind::InvalidRegex {
                    group: group.name.clone(),
                    pattern: match rule {
                        MemberRule::Regex(p) => p.clone(),
                        MemberRule::Prefix(p) => p.to_string(),
                    },
                    reason: e.to_string(),
                })),
            }
        }
        compiled.push(rules);
        if let Some(gate) = &group.gate {
            if !gates.contains(gate) {
                findings.push(Finding::error(FindingKind::UnknownGate {
                    group: group.name.clone(),
                    gate: gate.clone(),
                }));
            }
        }
    }

    let index: HashMap<&NamePath, usize> = groups.iter().enumerate().map(|(i, g)| (&g.name, i)).collect();
    for group in groups {
        for target in &group.depends_on {
            if !index.contains_key(target) {
                findings.push(Finding::error(FindingKind::DanglingDependency {
                    group: group.name.clone(),
                    target: target.clone(),
                }));
            }
        }
    }

    for cycle in find_cycles(groups, &index) {
        findings.push(Finding::error(FindingKind::Cycle { path: cycle }));
    }

    for leaf in leaves {
        if !compiled.iter().any(|rules| rules.iter().any(|r| r.matches(&leaf.name))) {
            findings.push(Finding::warning(FindingKind::OrphanLeaf {
                leaf: leaf.name.clone(),
            }));
        }
    }
    findings
}

/// Depth-first search reporting one cycle per back edge, in traversal order.
fn find_cycles(groups: &[GroupSpec], index: &HashMap<&NamePath, usize>) -> Vec<Vec<NamePath>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        OnStack,
        Done,
    }
    fn visit(
        node: usize,
        groups: &[GroupSpec],
        index: &HashMap<&NamePath, usize>,
        marks: &mut [Mark],
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<NamePath>>,
    ) {
        marks[node] = Mark::OnStack;
        stack.push(node);
        for dep in &groups[node].depends_on {
            let Some(&next) = index.get(dep) else { continue };
            match marks[next] {
                Mark::New => visit(next, groups, index, marks, stack, out),
                Mark::OnStack => {
                    let start = stack.iter().position(|&n| n == next).expect("on stack");
                    out.push(stack[start..].iter().map(|&n| groups[n].name.clone()).collect());
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks[node] = Mark::Done;
    }
    let mut marks = vec![Mark::New; groups.len()];
    let mut out = Vec::new();
    for start in 0..groups.len() {
        if marks[start] == Mark::New {
            visit(start, groups, index, &mut marks, &mut Vec::new(), &mut out);
        }
    }
    out
}

/// Every check applied to a config file, including monitor thresholds and
/// the countermeasure policy.
pub fn validate_graph(config: &GraphConfig) -> Vec<Finding> {
    let leaves: Vec<LeafDecl> = config
        .monitors
        .iter()
        .map(|m| LeafDecl {
            name: m.spec.name().clone(),
            stale_after_ms: m.stale_after_ms,
        })
        .collect();
    let mut findings = validate_structure(&config.groups, &leaves, &config.gates);
    for m in &config.monitors {
        if let Err(reason) = m.spec.validate() {
            findings.push(Finding::error(FindingKind::InvalidMonitor {
                name: m.spec.name().clone(),
                reason,
            }));
        }
    }
    if config.evaluation.tick_ms == 0 {
        findings.push(Finding::error(FindingKind::InvalidEvaluation {
            reason: "tick_ms must be > 0".into(),
        }));
    }
    if !(config.evaluation.staleness_factor > 0.0) {
        findings.push(Finding::error(FindingKind::InvalidEvaluation {
            reason: "staleness_factor must be > 0".into(),
        }));
    }
    let group_names: BTreeSet<&NamePath> = config.groups.iter().map(|g| &g.name).collect();
    for vital in &config.countermeasures.vital_groups {
        if !group_names.contains(vital) {
            findings.push(Finding::error(FindingKind::UnknownVitalGroup { group: vital.clone() }));
        }
    }
    if let Err(reason) = config.countermeasures.validate() {
        findings.push(Finding::error(FindingKind::InvalidPolicy { reason }));
    }
    findings.extend(crate::simulator::validate_stubs(&config.stubs));
    findings
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledGroup {
    pub spec: GroupSpec,
    pub members: Vec<usize>,
    pub deps: Vec<usize>,
    /// Transitive dependencies, ascending.
    pub ancestors: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct LeafInfo {
    pub name: NamePath,
    pub stale_after_ms: u64,
    /// Groups claiming this leaf, ascending.
    pub groups: Vec<usize>,
}

/// A validated diagnostic graph ready for evaluation.
///
/// Can only be obtained through [`DiagnosticGraph::new`] or
/// [`DiagnosticGraph::from_config`], both of which refuse graphs with
/// error findings, so evaluation never sees a cyclic or dangling graph.
#[derive(Debug, Clone)]
pub struct DiagnosticGraph {
    pub(crate) groups: Vec<CompiledGroup>,
    pub(crate) leaves: Vec<LeafInfo>,
    /// Group indices, dependencies before dependents.
    pub(crate) topo: Vec<usize>,
    pub(crate) gates: GatingTable,
    pub(crate) evaluation: EvaluationConfig,
    group_index: BTreeMap<NamePath, usize>,
}

impl DiagnosticGraph {
    pub fn new(
        groups: Vec<GroupSpec>,
        leaves: Vec<LeafDecl>,
        gates: GatingTable,
        evaluation: EvaluationConfig,
    ) -> Result<Self, Vec<Finding>> {
        let findings: Vec<Finding> = validate_structure(&groups, &leaves, &gates)
            .into_iter()
            .filter(Finding::is_error)
            .collect();
        if !findings.is_empty() {
            return Err(findings);
        }
        let group_index: BTreeMap<NamePath, usize> =
            groups.iter().enumerate().map(|(i, g)| (g.name.clone(), i)).collect();
        let rules: Vec<Vec<CompiledRule>> = groups
            .iter()
            .map(|g| g.members.iter().map(|r| CompiledRule::compile(r).expect("validated")).collect())
            .collect();
        let default_stale = evaluation.default_stale_after_ms();
        let leaf_infos: Vec<LeafInfo> = leaves
            .iter()
            .map(|l| LeafInfo {
                name: l.name.clone(),
                stale_after_ms: l.stale_after_ms.unwrap_or(default_stale),
                groups: rules
                    .iter()
                    .enumerate()
                    .filter(|(_, rs)| rs.iter().any(|r| r.matches(&l.name)))
                    .map(|(i, _)| i)
                    .collect(),
            })
            .collect();
        let mut compiled: Vec<CompiledGroup> = groups
            .into_iter()
            .enumerate()
            .map(|(gi, spec)| {
                let deps = spec.depends_on.iter().map(|d| group_index[d]).collect();
                CompiledGroup {
                    spec,
                    members: leaf_infos
                        .iter()
                        .enumerate()
                        .filter(|(_, l)| l.groups.contains(&gi))
                        .map(|(li, _)| li)
                        .collect(),
                    deps,
                    ancestors: Vec::new(),
                }
            })
            .collect();
        let topo = topological_order(&compiled);
        for &g in &topo {
            let mut anc = BTreeSet::new();
            for &d in &compiled[g].deps {
                anc.insert(d);
                anc.extend(compiled[d].ancestors.iter().copied());
            }
            compiled[g].ancestors = anc.into_iter().collect();
        }
        Ok(DiagnosticGraph {
            groups: compiled,
            leaves: leaf_infos,
            topo,
            gates,
            evaluation,
            group_index,
        })
    }

    pub fn from_config(config: &GraphConfig) -> Result<Self, Vec<Finding>> {
        Self::from_config_with_leaves(config, &[])
    }

    /// Like [`DiagnosticGraph::from_config`] with additional leaves, e.g.
    /// plug-in monitors registered at run time.
    pub fn from_config_with_leaves(config: &GraphConfig, extra: &[LeafDecl]) -> Result<Self, Vec<Finding>> {
        let errors: Vec<Finding> = validate_graph(config).into_iter().filter(Finding::is_error).collect();
        if !errors.is_empty() {
            return Err(errors);
        }
        let leaves = config
            .monitors
            .iter()
            .map(|m| LeafDecl {
                name: m.spec.name().clone(),
                stale_after_ms: m.stale_after_ms,
            })
            .chain(extra.iter().cloned())
            .collect();
        DiagnosticGraph::new(
            config.groups.clone(),
            leaves,
            config.gates.clone(),
            config.evaluation,
        )
    }

    pub fn group_specs(&self) -> impl Iterator<Item = &GroupSpec> {
        self.groups.iter().map(|g| &g.spec)
    }

    pub fn group_names(&self) -> impl Iterator<Item = &NamePath> {
        self.groups.iter().map(|g| &g.spec.name)
    }

    pub fn leaf_names(&self) -> impl Iterator<Item = &NamePath> {
        self.leaves.iter().map(|l| &l.name)
    }

    pub fn group_index(&self, name: &NamePath) -> Option<usize> {
        self.group_index.get(name).copied()
    }

    /// Member leaves of a group, in declaration order.
    pub fn members_of(&self, group: &NamePath) -> Vec<&NamePath> {
        self.group_index(group)
            .map(|g| self.groups[g].members.iter().map(|&l| &self.leaves[l].name).collect())
            .unwrap_or_default()
    }

    /// Transitive dependencies of a group.
    pub fn ancestors_of(&self, group: &NamePath) -> Vec<&NamePath> {
        self.group_index(group)
            .map(|g| self.groups[g].ancestors.iter().map(|&a| &self.groups[a].spec.name).collect())
            .unwrap_or_default()
    }

    pub fn gates(&self) -> &GatingTable {
        &self.gates
    }

    pub fn evaluation(&self) -> &EvaluationConfig {
        &self.evaluation
    }

    /// Group names, dependencies before dependents.
    pub fn topological_names(&self) -> Vec<&NamePath> {
        self.topo.iter().map(|&g| &self.groups[g].spec.name).collect()
    }
}

/// Kahn's algorithm; ties broken by declaration order.
fn topological_order(groups: &[CompiledGroup]) -> Vec<usize> {
    let mut indegree: Vec<usize> = groups.iter().map(|g| g.deps.len()).collect();
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
    for (i, g) in groups.iter().enumerate() {
        for &d in &g.deps {
            dependents[d].push(i);
        }
    }
    let mut ready: BTreeSet<usize> = (0..groups.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(groups.len());
    while let Some(next) = ready.pop_first() {
        order.push(next);
        for &d in &dependents[next] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.insert(d);
            }
        }
    }
    debug_assert_eq!(order.len(), groups.len(), "validated graphs are acyclic");
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path;

    fn group(name: &str, deps: &[&str]) -> GroupSpec {
        GroupSpec {
            name: path!(name),
            label: None,
            members: vec![MemberRule::Prefix(path!(name))],
            depends_on: deps.iter().map(|d| path!(d)).collect(),
            gate: None,
        }
    }

    #[test]
    fn two_node_cycle_is_one_finding() {
        let groups = vec![group("/a", &["/b"]), group("/b", &["/a"])];
        let findings = validate_structure(&groups, &[], &GatingTable::default());
        let cycles: Vec<_> = findings
            .iter()
            .filter_map(|f| match &f.kind {
                FindingKind::Cycle { path } => Some(path.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(cycles, vec![vec![path!("/a"), path!("/b")]]);
        assert_eq!(findings.len(), 1);
        assert!(findings[0].to_string().contains("/a -> /b -> /a"));
    }

    #[test]
    fn dangling_dependency() {
        let groups = vec![group("/a", &["/nonexistent"])];
        let findings = validate_structure(&groups, &[], &GatingTable::default());
        assert_eq!(
            findings,
            vec![Finding::error(FindingKind::DanglingDependency {
                group: path!("/a"),
                target: path!("/nonexistent")
            })]
        );
    }

    #[test]
    fn duplicates_orphans_gates_regex() {
        let mut g = group("/a", &[]);
        g.gate = Some("missing".into());
        g.members.push(MemberRule::Regex("(".into()));
        let groups = vec![g, group("/a", &[])];
        let leaves = vec![LeafDecl::new(path!("/a/x")), LeafDecl::new(path!("/zzz/orphan"))];
        let findings = validate_structure(&groups, &leaves, &GatingTable::default());
        let kinds: Vec<&str> = findings
            .iter()
            .map(|f| match f.kind {
                FindingKind::DuplicateName { .. } => "dup",
                FindingKind::UnknownGate { .. } => "gate",
                FindingKind::InvalidRegex { .. } => "regex",
                FindingKind::OrphanLeaf { .. } => "orphan",
                _ => "other",
            })
            .collect();
        assert_eq!(kinds, ["dup", "regex", "gate", "orphan"]);
        assert!(!findings[3].is_error());
    }

    #[test]
    fn member_matching() {
        let sensors = group("/sensors", &[]);
        assert!(match_members(&sensors, &path!("/sensors/velodyne_packet_alive")).unwrap());
        assert!(!match_members(&sensors, &path!("/sensorsx/foo")).unwrap());
        let loc = GroupSpec {
            members: vec![MemberRule::Regex("^/localization/tf_.*$".into())],
            ..group("/localization", &[])
        };
        assert!(match_members(&loc, &path!("/localization/tf_map")).unwrap());
        assert!(!match_members(&loc, &path!("/localization/self_state")).unwrap());
        // Regex must match the full name.
        let partial = GroupSpec {
            members: vec![MemberRule::Regex("tf_".into())],
            ..group("/localization", &[])
        };
        assert!(!match_members(&partial, &path!("/localization/tf_map")).unwrap());
        let broken = GroupSpec {
            members: vec![MemberRule::Regex("[".into())],
            ..group("/x", &[])
        };
        assert!(match_members(&broken, &path!("/x/y")).is_err());
    }

    #[test]
    fn reference_graph_is_valid() {
        let cfg = GraphConfig::reference();
        let findings = validate_graph(&cfg);
        assert!(findings.is_empty(), "{findings:?}");
        let graph = DiagnosticGraph::from_config(&cfg).unwrap();
        let topo: Vec<String> = graph.topological_names().iter().map(|n| n.to_string()).collect();
        let pos = |n: &str| topo.iter().position(|t| t == n).unwrap();
        assert!(pos("/sensors") < pos("/localization"));
        assert!(pos("/localization") < pos("/perception"));
        assert!(pos("/planning") < pos("/execution"));
        assert!(graph
            .ancestors_of(&path!("/execution"))
            .contains(&&path!("/sensors")));
    }

    #[test]
    fn compile_refuses_cycles() {
        let groups = vec![group("/a", &["/b"]), group("/b", &["/a"])];
        let err = DiagnosticGraph::new(groups, vec![], GatingTable::default(), EvaluationConfig::default())
            .unwrap_err();
        assert!(matches!(err[0].kind, FindingKind::Cycle { .. }));
    }
}
