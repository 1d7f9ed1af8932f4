use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Fault;
use crate::aggregation::Reason;
use crate::config::{parse_text, read_file, ConfigError, Format};
use crate::system_state::{OperatorEvent, VehicleState};
use crate::{DiagnosticState, NamePath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Inject {
        target: NamePath,
        fault: Fault,
    },
    Clear {
        target: NamePath,
    },
    OperatorEvent {
        event: OperatorEvent,
    },
    SetSpeed {
        speed_mps: f64,
    },
    /// `group` must show `expected` at some tick in `[t, t + deadline_ms]`
    /// and keep it until the next non-assert event.
    Assert {
        group: NamePath,
        expected: DiagnosticState,
        deadline_ms: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<Reason>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub t_ms: u64,
    #[serde(flatten)]
    pub event: EventKind,
}

impl ScriptEvent {
    pub fn new(t_ms: u64, event: EventKind) -> Self {
        ScriptEvent { t_ms, event }
    }

    pub fn is_assert(&self) -> bool {
        matches!(self.event, EventKind::Assert { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default = "default_initial")]
    pub initial_state: VehicleState,
    pub duration_ms: u64,
    /// Evaluate with every dependency edge removed.
    #[serde(default)]
    pub strip_dependencies: bool,
    #[serde(default)]
    pub events: Vec<ScriptEvent>,
}

fn default_initial() -> VehicleState {
    VehicleState::Default
}

#[derive(Deserialize)]
struct ScenarioFile {
    scenario: ScenarioScript,
}

#[derive(Serialize)]
struct ScenarioFileOut<'a> {
    scenario: &'a ScenarioScript,
}

impl ScenarioScript {
    /// Parses a scenario file whose top-level key is `scenario`.
    pub fn parse(text: &str, format: Option<Format>) -> Result<Self, ConfigError> {
        parse_text::<ScenarioFile>(text, format).map(|f| f.scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        ScenarioScript::parse(&read_file(path)?, Format::from_path(path))
    }

    pub fn to_yaml(&self) -> String {
        crate::config::to_yaml(&ScenarioFileOut { scenario: self })
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.duration_ms == 0 {
            return Err("duration_ms must be > 0".into());
        }
        if let Some(w) = self.events.windows(2).find(|w| w[1].t_ms < w[0].t_ms) {
            return Err(format!("events out of order: {} after {}", w[1].t_ms, w[0].t_ms));
        }
        for e in &self.events {
            if e.t_ms > self.duration_ms {
                return Err(format!("event at {} ms is past the end of the run", e.t_ms));
            }
            match &e.event {
                EventKind::Inject { fault, .. } => fault.validate()?,
                EventKind::SetSpeed { speed_mps } if !(speed_mps.is_finite() && *speed_mps >= 0.0) => {
                    return Err(format!("speed_mps must be finite and >= 0, got {speed_mps}"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
