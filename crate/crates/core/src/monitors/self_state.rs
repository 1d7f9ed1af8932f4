use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Monitor;
use crate::{DataMessage, DiagnosticState, DiagnosticStatus, MonitorTaxonomy, NamePath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfStateConfig {
    pub name: NamePath,
    /// Channel on which the component publishes its own state.
    pub channel: NamePath,
}

/// A component's report about itself, as published on its status channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub source: NamePath,
    pub state_token: String,
    pub message: String,
    pub values: BTreeMap<String, String>,
    pub timestamp_ms: u64,
}

impl ComponentReport {
    /// Reads `state` and `message` fields; every other field becomes a value.
    pub fn from_message(source: &NamePath, message: &DataMessage) -> Self {
        let mut values = BTreeMap::new();
        let mut state_token = String::new();
        let mut text = String::new();
        for (key, value) in &message.fields {
            match key.as_str() {
                "state" => state_token = value.to_string(),
                "message" => text = value.to_string(),
                _ => {
                    values.insert(key.clone(), value.to_string());
                }
            }
        }
        ComponentReport {
            source: source.clone(),
            state_token,
            message: text,
            values,
            timestamp_ms: message.stamp_ms,
        }
    }
}

/// Re-publishes a component's self-assessment under the relay's name.
pub fn self_state_relay(relay_name: &NamePath, report: &ComponentReport) -> DiagnosticStatus {
    let mut status = DiagnosticStatus {
        name: relay_name.clone(),
        state: DiagnosticState::Unknown,
        message: report.message.clone(),
        values: report.values.clone(),
        timestamp_ms: report.timestamp_ms,
    };
    status.values.insert("source".into(), report.source.to_string());
    match report.state_token.parse::<DiagnosticState>() {
        Ok(state) => status.state = state,
        Err(_) => status.message = format!("unmapped state token `{}`", report.state_token),
    }
    status
}

#[derive(Debug, Clone)]
pub struct SelfStateMonitor {
    cfg: SelfStateConfig,
    latest: Option<ComponentReport>,
}

impl SelfStateMonitor {
    pub fn new(cfg: SelfStateConfig) -> Self {
        SelfStateMonitor { cfg, latest: None }
    }
}

impl Monitor for SelfStateMonitor {
    fn name(&self) -> &NamePath {
        &self.cfg.name
    }

    fn taxonomy(&self) -> MonitorTaxonomy {
        MonitorTaxonomy::ISOLATED_CONTENT
    }

    fn channels(&self) -> Vec<NamePath> {
        vec![self.cfg.channel.clone()]
    }

    fn observe(&mut self, channel: &NamePath, message: &DataMessage, _receipt_ms: u64) {
        self.latest = Some(ComponentReport::from_message(channel, message));
    }

    fn step(&mut self, now_ms: u64) -> DiagnosticStatus {
        match &self.latest {
            Some(report) => self_state_relay(&self.cfg.name, report),
            None => DiagnosticStatus::new(self.cfg.name.clone(), DiagnosticState::Unknown, now_ms)
                .with_message("no report yet"),
        }
    }
}
