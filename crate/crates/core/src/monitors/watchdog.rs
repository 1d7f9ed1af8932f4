use serde::{Deserialize, Serialize};

use super::{secs_to_ms, Monitor};
use crate::{DataMessage, DiagnosticState, DiagnosticStatus, MonitorTaxonomy, NamePath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatchdogConfig {
    pub name: NamePath,
    /// Channel on which the target answers heartbeat probes.
    pub target: NamePath,
    pub timeout_s: f64,
}

impl WatchdogConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.timeout_s > 0.0) {
            return Err(format!("timeout_s must be > 0, got {}", self.timeout_s));
        }
        Ok(())
    }
}

pub fn watchdog_step(cfg: &WatchdogConfig, last_heartbeat_ms: Option<u64>, now_ms: u64) -> DiagnosticStatus {
    let Some(last) = last_heartbeat_ms else {
        return DiagnosticStatus::new(cfg.name.clone(), DiagnosticState::Unknown, now_ms)
            .with_message("never seen");
    };
    let silence_ms = now_ms.saturating_sub(last);
    let status = DiagnosticStatus::new(cfg.name.clone(), DiagnosticState::Ok, now_ms)
        .with_value("silence_s", format!("{:.3}", silence_ms as f64 / 1000.0));
    if silence_ms > secs_to_ms(cfg.timeout_s) {
        DiagnosticStatus {
            state: DiagnosticState::Error,
            message: format!("{} unreachable", cfg.target),
            ..status
        }
    } else {
        status
    }
}

#[derive(Debug, Clone)]
pub struct WatchdogMonitor {
    cfg: WatchdogConfig,
    last: Option<u64>,
}

impl WatchdogMonitor {
    pub fn new(cfg: WatchdogConfig) -> Self {
        WatchdogMonitor { cfg, last: None }
    }
}

impl Monitor for WatchdogMonitor {
    fn name(&self) -> &NamePath {
        &self.cfg.name
    }

    fn taxonomy(&self) -> MonitorTaxonomy {
        MonitorTaxonomy::ISOLATED_META
    }

    fn channels(&self) -> Vec<NamePath> {
        vec![self.cfg.target.clone()]
    }

    fn observe(&mut self, _channel: &NamePath, _message: &DataMessage, receipt_ms: u64) {
        self.last = Some(self.last.map_or(receipt_ms, |l| l.max(receipt_ms)));
    }

    fn step(&mut self, now_ms: u64) -> DiagnosticStatus {
        watchdog_step(&self.cfg, self.last, now_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path;

    fn cfg() -> WatchdogConfig {
        WatchdogConfig {
            name: path!("/execution/controller_watchdog"),
            target: path!("/execution/heartbeat"),
            timeout_s: 5.0,
        }
    }

    #[test]
    fn examples() {
        assert_eq!(watchdog_step(&cfg(), Some(2000), 7500).state, DiagnosticState::Error);
        assert_eq!(watchdog_step(&cfg(), Some(2000), 6900).state, DiagnosticState::Ok);
        assert_eq!(watchdog_step(&cfg(), Some(2000), 7000).state, DiagnosticState::Ok);
        assert_eq!(watchdog_step(&cfg(), None, 7000).state, DiagnosticState::Unknown);
    }
}
