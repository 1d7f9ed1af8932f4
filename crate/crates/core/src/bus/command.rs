use serde::{Deserialize, Serialize};

use crate::simulator::Fault;
use crate::system_state::OperatorEvent;
use crate::NamePath;

/// Operator and tooling requests accepted on the command channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "snake_case")]
pub enum Command {
    GetSnapshot,
    InjectFault {
        target: NamePath,
        fault: Fault,
    },
    ClearFault {
        target: NamePath,
    },
    OperatorEvent {
        event: OperatorEvent,
    },
    SetSpeed {
        speed_mps: f64,
    },
    /// Sent by a client to mark a snapshot as seen, and by the server to
    /// confirm a command (`of` names the confirmed verb).
    Ack {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tick_ms: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        of: Option<String>,
    },
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::GetSnapshot => "get_snapshot",
            Command::InjectFault { .. } => "inject_fault",
            Command::ClearFault { .. } => "clear_fault",
            Command::OperatorEvent { .. } => "operator_event",
            Command::SetSpeed { .. } => "set_speed",
            Command::Ack { .. } => "ack",
        }
    }

    pub fn ack(of: &str) -> Self {
        Command::Ack {
            tick_ms: None,
            of: Some(of.to_string()),
        }
    }

    /// Argument checks that do not need any system state.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Command::SetSpeed { speed_mps } if !speed_mps.is_finite() || *speed_mps < 0.0 => {
                Err(format!("speed_mps must be finite and >= 0, got {speed_mps}"))
            }
            Command::InjectFault { fault, .. } => fault.validate(),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path;

    #[test]
    fn wire_shape() {
        let cmd = Command::InjectFault {
            target: path!("/sensors/lidar_front"),
            fault: Fault::Outage,
        };
        assert_eq!(
            serde_json::to_string(&cmd).unwrap(),
            r#"{"verb":"inject_fault","target":"/sensors/lidar_front","fault":{"kind":"outage"}}"#
        );
        let ev: Command = serde_json::from_str(r#"{"verb":"operator_event","event":"Login"}"#).unwrap();
        assert_eq!(ev, Command::OperatorEvent { event: OperatorEvent::Login });
        assert!(serde_json::from_str::<Command>(r#"{"verb":"self_destruct"}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(Command::SetSpeed { speed_mps: -1.0 }.validate().is_err());
        assert!(Command::SetSpeed { speed_mps: 3.0 }.validate().is_ok());
        let bad = Command::InjectFault {
            target: path!("/x"),
            fault: Fault::Latency { delay_s: -0.1 },
        };
        assert!(bad.validate().is_err());
    }
}
