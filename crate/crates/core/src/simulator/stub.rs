//! Deterministic stand-ins for the vehicle's software components.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::aggregation::{Finding, FindingKind};
use crate::{DataMessage, DataValue, NamePath};

/// Fault armed on a stub by `inject_fault`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fault {
    /// No emissions at all.
    Outage,
    /// Message stamps lag the receipt time by `delay_s`.
    Latency { delay_s: f64 },
    /// Every value output carries `value` instead of its nominal reading.
    Value { value: DataValue },
    /// Pose outputs are shifted by `offset_m` along x.
    Divergence { offset_m: f64 },
}

impl Fault {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Fault::Latency { delay_s } if !(delay_s.is_finite() && *delay_s >= 0.0) => {
                Err(format!("delay_s must be finite and >= 0, got {delay_s}"))
            }
            Fault::Divergence { offset_m } if !offset_m.is_finite() => {
                Err(format!("offset_m must be finite, got {offset_m}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PayloadGen {
    /// Only the stamp, plus a sequence number.
    Heartbeat,
    /// `x`, `y` of the simulated vehicle position and its speed.
    Pose,
    Value {
        field: String,
        nominal: f64,
        /// Reading emitted while inputs are stale; defaults to nominal.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        degraded: Option<f64>,
    },
    /// A component's own state token, relayed by self-state monitors.
    SelfReport {
        #[serde(default = "ok_token")]
        nominal: String,
        #[serde(default = "error_token")]
        degraded: String,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        degraded_message: String,
    },
}

fn ok_token() -> String {
    "OK".into()
}

fn error_token() -> String {
    "ERROR".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub channel: NamePath,
    pub rate_hz: f64,
    pub payload: PayloadGen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubSpec {
    pub name: NamePath,
    pub outputs: Vec<OutputSpec>,
    /// Channels this component consumes. When any of them has not carried a
    /// message stamped within `stale_after_ms`, outputs are stamped with the
    /// oldest input stamp and degraded readings are emitted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<NamePath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stale_after_ms: Option<u64>,
}

const DEFAULT_INPUT_STALE_MS: u64 = 500;

pub fn validate_stubs(stubs: &[StubSpec]) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut names = BTreeSet::new();
    let mut channels: BTreeMap<&NamePath, &NamePath> = BTreeMap::new();
    let mut invalid = |name: &NamePath, reason: String| {
        findings.push(Finding::error(FindingKind::InvalidStub {
            name: name.clone(),
            reason,
        }))
    };
    for stub in stubs {
        if !names.insert(&stub.name) {
            invalid(&stub.name, "duplicate stub name".into());
        }
        if stub.outputs.is_empty() {
            invalid(&stub.name, "no outputs".into());
        }
        for out in &stub.outputs {
            if !(out.rate_hz > 0.0 && out.rate_hz <= 1000.0) {
                invalid(&stub.name, format!("rate_hz on {} must be in (0, 1000], got {}", out.channel, out.rate_hz));
            }
            if let Some(owner) = channels.insert(&out.channel, &stub.name) {
                invalid(&stub.name, format!("channel {} already published by {owner}", out.channel));
            }
        }
        if stub.inputs.contains(&stub.name) {
            invalid(&stub.name, "stub consumes its own name".into());
        }
    }
    findings
}

/// Values taken from the simulated world for one emission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldSample {
    pub x: f64,
    pub y: f64,
    pub speed_mps: f64,
}

#[derive(Debug, Clone)]
struct OutputState {
    spec: OutputSpec,
    period_ms: u64,
    next_emit_ms: u64,
    seq: u64,
}

/// Runtime state of one [`StubSpec`].
#[derive(Debug, Clone)]
pub struct ComponentStub {
    spec: StubSpec,
    outputs: Vec<OutputState>,
    fault: Option<Fault>,
}

impl ComponentStub {
    pub fn new(spec: StubSpec) -> Self {
        let outputs = spec
            .outputs
            .iter()
            .map(|o| OutputState {
                spec: o.clone(),
                period_ms: (1000.0 / o.rate_hz).round().max(1.0) as u64,
                next_emit_ms: 0,
                seq: 0,
            })
            .collect();
        ComponentStub {
            spec,
            outputs,
            fault: None,
        }
    }

    pub fn name(&self) -> &NamePath {
        &self.spec.name
    }

    pub fn spec(&self) -> &StubSpec {
        &self.spec
    }

    pub fn fault(&self) -> Option<&Fault> {
        self.fault.as_ref()
    }

    pub fn inject(&mut self, fault: Fault) {
        self.fault = Some(fault);
    }

    pub fn clear(&mut self) {
        self.fault = None;
    }

    /// Oldest input stamp if any input is stale at `now_ms`.
    ///
    /// `last_stamps` holds the newest stamp seen per channel; an input that
    /// never carried a message counts as stale since time zero.
    fn stale_input(&self, last_stamps: &BTreeMap<NamePath, u64>, now_ms: u64) -> Option<u64> {
        let limit = self.spec.stale_after_ms.unwrap_or(DEFAULT_INPUT_STALE_MS);
        let oldest = self
            .spec
            .inputs
            .iter()
            .map(|c| last_stamps.get(c).copied().unwrap_or(0))
            .min()?;
        (now_ms.saturating_sub(oldest) > limit).then_some(oldest)
    }

    /// Messages due at `now_ms`, in output declaration order.
    pub fn emit(&mut self, now_ms: u64, world: WorldSample, last_stamps: &BTreeMap<NamePath, u64>) -> Vec<(NamePath, DataMessage)> {
        let stale = self.stale_input(last_stamps, now_ms);
        let mut out = Vec::new();
        for o in &mut self.outputs {
            if now_ms < o.next_emit_ms {
                continue;
            }
            while o.next_emit_ms <= now_ms {
                o.next_emit_ms += o.period_ms;
            }
            if self.fault == Some(Fault::Outage) {
                continue;
            }
            o.seq += 1;
            let mut stamp = stale.unwrap_or(now_ms);
            if let Some(Fault::Latency { delay_s }) = &self.fault {
                stamp = stamp.saturating_sub(crate::monitors::secs_to_ms(*delay_s));
            }
            let mut msg = DataMessage::new(stamp).with("seq", o.seq as f64);
            match &o.spec.payload {
                PayloadGen::Heartbeat => {}
                PayloadGen::Pose => {
                    let offset = match &self.fault {
                        Some(Fault::Divergence { offset_m }) => *offset_m,
                        _ => 0.0,
                    };
                    msg = msg
                        .with("x", world.x + offset)
                        .with("y", world.y)
                        .with("speed_mps", world.speed_mps);
                }
                PayloadGen::Value {
                    field,
                    nominal,
                    degraded,
                } => {
                    let value = match (&self.fault, stale) {
                        (Some(Fault::Value { value }), _) => value.clone(),
                        (_, Some(_)) => DataValue::Number(degraded.unwrap_or(*nominal)),
                        (_, None) => DataValue::Number(*nominal),
                    };
                    msg = msg.with(field.clone(), value);
                }
                PayloadGen::SelfReport {
                    nominal,
                    degraded,
                    degraded_message,
                } => {
                    msg = match stale {
                        Some(_) => msg
                            .with("state", degraded.as_str())
                            .with("message", degraded_message.as_str()),
                        None => msg.with("state", nominal.as_str()).with("message", ""),
                    };
                }
            }
            out.push((o.spec.channel.clone(), msg));
        }
        out
    }
}
