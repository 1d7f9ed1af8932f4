//! Deterministic virtual-time harness: component stubs, scripted fault
//! injection and the built-in scenarios.

mod builtin;
mod clock;
mod engine;
mod scenario;
mod stub;
mod timeline;

pub use builtin::{builtin_scenario, builtin_scenarios, BUILTIN_NAMES};
pub use clock::VirtualClock;
pub use engine::{SimOptions, Simulation};
pub use scenario::{EventKind, ScenarioScript, ScriptEvent};
pub use stub::{validate_stubs, ComponentStub, Fault, OutputSpec, PayloadGen, StubSpec, WorldSample};
pub use timeline::{ActionRecord, IncidentRecord, Notice, StateChangeRecord, Timeline};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::aggregation::{Finding, Reason};
use crate::bus::Command;
use crate::config::GraphConfig;
use crate::{DiagnosticState, NamePath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertOutcome {
    pub t_ms: u64,
    pub group: NamePath,
    pub expected: DiagnosticState,
    pub deadline_ms: u64,
    pub passed: bool,
    /// First tick contradicting the assertion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergent_tick_ms: Option<u64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub timeline: Timeline,
    pub asserts: Vec<AssertOutcome>,
}

impl RunResult {
    pub fn passed(&self) -> bool {
        self.asserts.iter().all(|a| a.passed)
    }

    /// Earliest failing tick over all asserts.
    pub fn first_divergent_tick(&self) -> Option<u64> {
        self.asserts.iter().filter_map(|a| a.divergent_tick_ms).min()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid graph config:\n{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Graph(Vec<Finding>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub incident_dir: Option<PathBuf>,
    pub epoch_offset_ms: u64,
}

/// Executes `scenario` against `config` from t = 0 to `duration_ms`
/// inclusive and evaluates every assert against the resulting timeline.
pub fn run(scenario: &ScenarioScript, config: &GraphConfig) -> Result<RunResult, RunError> {
    run_with(scenario, config, RunOptions::default())
}

pub fn run_with(scenario: &ScenarioScript, config: &GraphConfig, options: RunOptions) -> Result<RunResult, RunError> {
    let mut sim = prepare(scenario, config, options)?;
    let mut pending = scenario.events.iter().peekable();
    while sim.now_ms() <= scenario.duration_ms {
        while let Some(event) = pending.next_if(|e| e.t_ms <= sim.now_ms()) {
            apply_event(&mut sim, &event.event);
        }
        sim.step();
    }
    let timeline = sim.into_timeline();
    let asserts = evaluate_asserts(scenario, &timeline);
    Ok(RunResult { timeline, asserts })
}

/// A simulation configured for `scenario`, before its first step.
pub fn prepare(scenario: &ScenarioScript, config: &GraphConfig, options: RunOptions) -> Result<Simulation, RunError> {
    scenario.validate().map_err(RunError::Scenario)?;
    for event in &scenario.events {
        if let EventKind::Inject { target, .. } | EventKind::Clear { target } = &event.event {
            if !config.stubs.iter().any(|s| &s.name == target) {
                return Err(RunError::Scenario(format!("unknown stub {target}")));
            }
        }
        if let EventKind::Assert { group, .. } = &event.event {
            if !config.groups.iter().any(|g| &g.name == group) {
                return Err(RunError::Scenario(format!("assert on unknown group {group}")));
            }
        }
    }
    let mut sim = Simulation::new(
        config,
        SimOptions {
            initial_state: scenario.initial_state,
            strip_dependencies: scenario.strip_dependencies,
            incident_dir: options.incident_dir,
            epoch_offset_ms: options.epoch_offset_ms,
        },
    )
    .map_err(RunError::Graph)?;
    sim.set_scenario_name(&scenario.name);
    Ok(sim)
}

/// Feeds a non-assert script event through the command path.
pub fn apply_event(sim: &mut Simulation, event: &EventKind) {
    let command = match event {
        EventKind::Inject { target, fault } => Command::InjectFault {
            target: target.clone(),
            fault: fault.clone(),
        },
        EventKind::Clear { target } => Command::ClearFault { target: target.clone() },
        EventKind::OperatorEvent { event } => Command::OperatorEvent { event: *event },
        EventKind::SetSpeed { speed_mps } => Command::SetSpeed { speed_mps: *speed_mps },
        EventKind::Assert { .. } => return,
    };
    sim.handle_command(command);
}

/// An assert holds iff the group shows the expected state (and reason, if
/// given) at some tick in `[t, t + deadline]` and keeps it on every tick
/// up to, excluding, the next non-assert event or through the end of run.
pub fn evaluate_asserts(scenario: &ScenarioScript, timeline: &Timeline) -> Vec<AssertOutcome> {
    let mut out = Vec::new();
    for (i, event) in scenario.events.iter().enumerate() {
        let EventKind::Assert {
            group,
            expected,
            deadline_ms,
            reason,
        } = &event.event
        else {
            continue;
        };
        let hold_until = scenario.events[i + 1..]
            .iter()
            .find(|e| !e.is_assert() && e.t_ms > event.t_ms)
            .map_or(u64::MAX, |e| e.t_ms);
        let matches = |state: DiagnosticState, r: Reason| state == *expected && reason.is_none_or(|want| want == r);
        let ticks: Vec<(u64, bool)> = timeline
            .track(group)
            .filter(|(t, _)| *t >= event.t_ms && *t < hold_until)
            .map(|(t, n)| (t, matches(n.effective_state, n.reason)))
            .collect();
        let deadline = event.t_ms + deadline_ms;
        let reached = ticks.iter().position(|&(t, ok)| ok && t <= deadline);
        let (passed, divergent, detail) = match reached {
            None => {
                let tick = ticks.iter().take_while(|(t, _)| *t <= deadline).last().map(|(t, _)| *t);
                (false, tick, format!("{expected} not reached by {deadline} ms"))
            }
            Some(start) => match ticks[start..].iter().find(|(_, ok)| !ok) {
                Some(&(t, _)) => (false, Some(t), format!("reached at {} ms, lost at {t} ms", ticks[start].0)),
                None => (true, None, format!("reached at {} ms", ticks[start].0)),
            },
        };
        let reason_note = reason.map(|r| format!(" ({})", r.as_str())).unwrap_or_default();
        out.push(AssertOutcome {
            t_ms: event.t_ms,
            group: group.clone(),
            expected: *expected,
            deadline_ms: *deadline_ms,
            passed,
            divergent_tick_ms: divergent,
            detail: format!("{detail}{reason_note}"),
        });
    }
    out
}
