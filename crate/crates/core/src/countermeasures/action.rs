use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::aggregation::EvaluationSnapshot;
use crate::system_state::VehicleState;
use crate::{DiagnosticState, NamePath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountermeasurePolicy {
    /// Groups whose ERROR while driving triggers immediate deceleration.
    #[serde(default)]
    pub vital_groups: BTreeSet<NamePath>,
    #[serde(default = "default_decel")]
    pub hard_decel_mps2: f64,
    #[serde(default = "default_recording")]
    pub recording_window_s: f64,
    /// Minimum spacing between two incident recordings.
    #[serde(default = "default_debounce")]
    pub debounce_s: f64,
}

fn default_decel() -> f64 {
    1.0
}

fn default_recording() -> f64 {
    30.0
}

fn default_debounce() -> f64 {
    10.0
}

impl Default for CountermeasurePolicy {
    fn default() -> Self {
        CountermeasurePolicy {
            vital_groups: BTreeSet::new(),
            hard_decel_mps2: default_decel(),
            recording_window_s: default_recording(),
            debounce_s: default_debounce(),
        }
    }
}

impl CountermeasurePolicy {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.hard_decel_mps2 > 0.0) {
            return Err(format!("hard_decel_mps2 must be > 0, got {}", self.hard_decel_mps2));
        }
        if !(self.recording_window_s > 0.0) {
            return Err(format!("recording_window_s must be > 0, got {}", self.recording_window_s));
        }
        if !(self.debounce_s >= 0.0) {
            return Err(format!("debounce_s must be >= 0, got {}", self.debounce_s));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action")]
pub enum Action {
    None,
    Notify,
    ControlledStop,
    HardDecel { rate_mps2: f64 },
}

impl Action {
    /// `None < Notify < ControlledStop < HardDecel`.
    pub fn rank(&self) -> u8 {
        match self {
            Action::None => 0,
            Action::Notify => 1,
            Action::ControlledStop => 2,
            Action::HardDecel { .. } => 3,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::HardDecel { rate_mps2 } => write!(f, "HardDecel({rate_mps2} m/s^2)"),
            other => fmt::Debug::fmt(other, f),
        }
    }
}

/// The single strongest applicable action for one snapshot.
pub fn decide_action(snapshot: &EvaluationSnapshot, policy: &CountermeasurePolicy, vehicle_state: VehicleState) -> Action {
    let mut vital_error = false;
    let mut any_error = false;
    let mut any_warning = false;
    for node in &snapshot.groups {
        match node.effective_state {
            DiagnosticState::Error => {
                any_error = true;
                vital_error |= policy.vital_groups.contains(&node.name);
            }
            DiagnosticState::Warning => any_warning = true,
            _ => {}
        }
    }
    if !vehicle_state.is_active() {
        // Nothing is moving, so the operator is only informed.
        return if any_error || any_warning { Action::Notify } else { Action::None };
    }
    if vital_error {
        Action::HardDecel {
            rate_mps2: policy.hard_decel_mps2,
        }
    } else if any_error {
        Action::ControlledStop
    } else if any_warning {
        Action::Notify
    } else {
        Action::None
    }
}
