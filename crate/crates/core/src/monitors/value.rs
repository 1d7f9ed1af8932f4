use serde::{Deserialize, Serialize};

use super::Monitor;
use crate::{DataMessage, DataValue, DiagnosticState, DiagnosticStatus, MonitorTaxonomy, NamePath};

/// Condition under which a single value counts as faulty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValuePredicate {
    Below(f64),
    Above(f64),
    /// Faulty when the rendered value differs from the expected text.
    NotEqual(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MalformedValue;

impl ValuePredicate {
    pub fn holds(&self, value: &DataValue) -> Result<bool, MalformedValue> {
        match self {
            ValuePredicate::Below(x) => value.as_f64().map(|v| v < *x).ok_or(MalformedValue),
            ValuePredicate::Above(x) => value.as_f64().map(|v| v > *x).ok_or(MalformedValue),
            ValuePredicate::NotEqual(expected) => Ok(value.to_string() != *expected),
        }
    }

    /// True if every value matched by `self` is also matched by `wider`.
    fn within(&self, wider: &ValuePredicate) -> bool {
        match (self, wider) {
            (ValuePredicate::Below(e), ValuePredicate::Below(w)) => e <= w,
            (ValuePredicate::Above(e), ValuePredicate::Above(w)) => e >= w,
            (ValuePredicate::NotEqual(e), ValuePredicate::NotEqual(w)) => e == w,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueMonitorConfig {
    pub name: NamePath,
    pub channel: NamePath,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warn: Option<ValuePredicate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ValuePredicate>,
}

impl ValueMonitorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.warn.is_none() && self.error.is_none() {
            return Err("at least one of warn/error must be set".into());
        }
        if let (Some(w), Some(e)) = (&self.warn, &self.error) {
            if !e.within(w) {
                return Err(format!("error region {e:?} must lie inside warn region {w:?}"));
            }
        }
        Ok(())
    }
}

pub fn value_step(cfg: &ValueMonitorConfig, latest: Option<&DataValue>, now_ms: u64) -> DiagnosticStatus {
    let Some(value) = latest else {
        return DiagnosticStatus::new(cfg.name.clone(), DiagnosticState::Unknown, now_ms)
            .with_message("no value observed");
    };
    let base = DiagnosticStatus::new(cfg.name.clone(), DiagnosticState::Ok, now_ms)
        .with_value(cfg.field.clone(), value.to_string());
    let check = |p: &Option<ValuePredicate>| p.as_ref().map_or(Ok(false), |p| p.holds(value));
    let state = match (check(&cfg.error), check(&cfg.warn)) {
        (Err(MalformedValue), _) | (_, Err(MalformedValue)) => {
            return DiagnosticStatus {
                state: DiagnosticState::Error,
                message: "malformed value".into(),
                ..base
            }
        }
        (Ok(true), _) => DiagnosticState::Error,
        (Ok(false), Ok(true)) => DiagnosticState::Warning,
        (Ok(false), Ok(false)) => DiagnosticState::Ok,
    };
    let message = match state {
        DiagnosticState::Ok => String::new(),
        _ => format!("{} = {value}", cfg.field),
    };
    DiagnosticStatus {
        state,
        message,
        ..base
    }
}

#[derive(Debug, Clone)]
pub struct ValueMonitor {
    cfg: ValueMonitorConfig,
    /// Outer `None`: nothing observed. Inner `None`: field missing.
    latest: Option<Option<DataValue>>,
}

impl ValueMonitor {
    pub fn new(cfg: ValueMonitorConfig) -> Self {
        ValueMonitor { cfg, latest: None }
    }
}

impl Monitor for ValueMonitor {
    fn name(&self) -> &NamePath {
        &self.cfg.name
    }

    fn taxonomy(&self) -> MonitorTaxonomy {
        MonitorTaxonomy::ISOLATED_CONTENT
    }

    fn channels(&self) -> Vec<NamePath> {
        vec![self.cfg.channel.clone()]
    }

    fn observe(&mut self, _channel: &NamePath, message: &DataMessage, _receipt_ms: u64) {
        self.latest = Some(message.get(&self.cfg.field).cloned());
    }

    fn step(&mut self, now_ms: u64) -> DiagnosticStatus {
        match &self.latest {
            Some(None) => DiagnosticStatus::new(self.cfg.name.clone(), DiagnosticState::Error, now_ms)
                .with_message(format!("malformed value: field `{}` missing", self.cfg.field)),
            Some(Some(v)) => value_step(&self.cfg, Some(v), now_ms),
            None => value_step(&self.cfg, None, now_ms),
        }
    }
}
