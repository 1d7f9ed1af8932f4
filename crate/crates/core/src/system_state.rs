//! Vehicle operational state machine and the gating table that maps
//! operational states to enabled diagnostic scopes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VehicleState {
    Default,
    LoggedIn,
    Localized,
    Active,
}

impl VehicleState {
    pub const ALL: [VehicleState; 4] = [
        VehicleState::Default,
        VehicleState::LoggedIn,
        VehicleState::Localized,
        VehicleState::Active,
    ];

    /// The boolean driving flag shown next to the dependency graph.
    pub fn is_active(self) -> bool {
        self == VehicleState::Active
    }
}

impl fmt::Display for VehicleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorEvent {
    Login,
    Logout,
    LocalizationConfirmed,
    MissionWithClearance,
    Arrived,
    Shutdown,
}

impl OperatorEvent {
    pub const ALL: [OperatorEvent; 6] = [
        OperatorEvent::Login,
        OperatorEvent::Logout,
        OperatorEvent::LocalizationConfirmed,
        OperatorEvent::MissionWithClearance,
        OperatorEvent::Arrived,
        OperatorEvent::Shutdown,
    ];
}

/// Result of feeding one operator event to the state machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: VehicleState,
    pub to: VehicleState,
    pub event: OperatorEvent,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

pub fn transition(state: VehicleState, event: OperatorEvent) -> Transition {
    use OperatorEvent as E;
    use VehicleState as S;
    let next = match (state, event) {
        (_, E::Logout) | (_, E::Shutdown) => Some(S::Default),
        (S::Default, E::Login) => Some(S::LoggedIn),
        (S::LoggedIn, E::LocalizationConfirmed) => Some(S::Localized),
        (S::Localized, E::MissionWithClearance) => Some(S::Active),
        (S::Active, E::Arrived) => Some(S::Localized),
        _ => None,
    };
    match next {
        Some(to) => Transition {
            from: state,
            to,
            event,
            accepted: true,
            notice: None,
        },
        None => Transition {
            from: state,
            to: state,
            event,
            accepted: false,
            notice: Some(format!("event {event:?} is not valid in state {state}")),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VehicleStateMachine {
    state: VehicleState,
}

impl VehicleStateMachine {
    pub fn new(initial: VehicleState) -> Self {
        VehicleStateMachine { state: initial }
    }

    pub fn state(&self) -> VehicleState {
        self.state
    }

    pub fn apply(&mut self, event: OperatorEvent) -> Transition {
        let t = transition(self.state, event);
        self.state = t.to;
        t
    }
}

impl Default for VehicleStateMachine {
    fn default() -> Self {
        VehicleStateMachine::new(VehicleState::Default)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown gate `{0}`")]
pub struct UnknownGate(pub String);

/// Gate name to the set of states in which the gate is open.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GatingTable(pub BTreeMap<String, BTreeSet<VehicleState>>);

impl GatingTable {
    pub fn contains(&self, gate: &str) -> bool {
        self.0.contains_key(gate)
    }

    pub fn insert(&mut self, gate: impl Into<String>, open_in: impl IntoIterator<Item = VehicleState>) {
        self.0.insert(gate.into(), open_in.into_iter().collect());
    }
}

pub fn gate_open(table: &GatingTable, gate: &str, state: VehicleState) -> Result<bool, UnknownGate> {
    table
        .0
        .get(gate)
        .map(|open| open.contains(&state))
        .ok_or_else(|| UnknownGate(gate.to_string()))
}

#[cfg(test)]
mod tests {
    use super::OperatorEvent as E;
    use super::VehicleState as S;
    use super::*;

    #[test]
    fn transition_examples() {
        assert_eq!(transition(S::Default, E::Login).to, S::LoggedIn);
        assert_eq!(transition(S::LoggedIn, E::LocalizationConfirmed).to, S::Localized);
        assert_eq!(transition(S::Localized, E::MissionWithClearance).to, S::Active);
        assert_eq!(transition(S::Active, E::Arrived).to, S::Localized);
        let rejected = transition(S::Default, E::Arrived);
        assert_eq!(rejected.to, S::Default);
        assert!(!rejected.accepted);
        assert!(rejected.notice.is_some());
    }

    #[test]
    fn total_and_reset_in_one_step() {
        for state in S::ALL {
            for event in E::ALL {
                let t = transition(state, event);
                assert_eq!(t.from, state);
                assert_eq!(t, transition(state, event));
                assert_eq!(t.accepted, t.notice.is_none());
            }
            assert_eq!(transition(state, E::Logout).to, S::Default);
            assert_eq!(transition(state, E::Shutdown).to, S::Default);
        }
    }

    #[test]
    fn gates() {
        let mut table = GatingTable::default();
        table.insert("active_only", [S::Active]);
        table.insert("always", S::ALL);
        assert!(gate_open(&table, "active_only", S::Active).unwrap());
        assert!(!gate_open(&table, "active_only", S::Localized).unwrap());
        for s in S::ALL {
            assert!(gate_open(&table, "always", s).unwrap());
        }
        assert_eq!(gate_open(&table, "nope", S::Active), Err(UnknownGate("nope".into())));
    }

    #[test]
    fn machine_applies_events() {
        let mut m = VehicleStateMachine::default();
        m.apply(E::Login);
        m.apply(E::LocalizationConfirmed);
        m.apply(E::MissionWithClearance);
        assert!(m.state().is_active());
        m.apply(E::Shutdown);
        assert_eq!(m.state(), S::Default);
    }
}
