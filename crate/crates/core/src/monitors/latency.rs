use serde::{Deserialize, Serialize};

use super::Monitor;
use crate::{DataMessage, DiagnosticState, DiagnosticStatus, MonitorTaxonomy, NamePath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyMonitorConfig {
    pub name: NamePath,
    pub channel: NamePath,
    pub warn_above_s: f64,
    pub error_above_s: f64,
}

impl LatencyMonitorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 <= self.warn_above_s && self.warn_above_s < self.error_above_s) {
            return Err(format!(
                "thresholds must satisfy 0 <= warn_above_s < error_above_s, got {} / {}",
                self.warn_above_s, self.error_above_s
            ));
        }
        Ok(())
    }
}

/// Stamp and receipt time of the most recent message, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StampedReceipt {
    pub stamp_ms: u64,
    pub receipt_ms: u64,
}

pub fn latency_step(
    cfg: &LatencyMonitorConfig,
    last: Option<StampedReceipt>,
    now_ms: u64,
) -> DiagnosticStatus {
    let Some(last) = last else {
        return DiagnosticStatus::new(cfg.name.clone(), DiagnosticState::Unknown, now_ms)
            .with_message("no message observed");
    };
    let delay_s = (last.receipt_ms as f64 - last.stamp_ms as f64) / 1000.0;
    let status = DiagnosticStatus::new(cfg.name.clone(), DiagnosticState::Ok, now_ms)
        .with_value("delay_s", format!("{delay_s:.3}"));
    if delay_s < 0.0 {
        return DiagnosticStatus {
            state: DiagnosticState::Warning,
            message: "clock skew".into(),
            ..status
        };
    }
    let state = if delay_s > cfg.error_above_s {
        DiagnosticState::Error
    } else if delay_s > cfg.warn_above_s {
        DiagnosticState::Warning
    } else {
        DiagnosticState::Ok
    };
    let message = match state {
        DiagnosticState::Ok => String::new(),
        _ => format!("delay {delay_s:.3} s on {}", cfg.channel),
    };
    DiagnosticStatus {
        state,
        message,
        ..status
    }
}

#[derive(Debug, Clone)]
pub struct LatencyMonitor {
    cfg: LatencyMonitorConfig,
    last: Option<StampedReceipt>,
}

impl LatencyMonitor {
    pub fn new(cfg: LatencyMonitorConfig) -> Self {
        LatencyMonitor { cfg, last: None }
    }
}

impl Monitor for LatencyMonitor {
    fn name(&self) -> &NamePath {
        &self.cfg.name
    }

    fn taxonomy(&self) -> MonitorTaxonomy {
        MonitorTaxonomy::ISOLATED_META
    }

    fn channels(&self) -> Vec<NamePath> {
        vec![self.cfg.channel.clone()]
    }

    fn observe(&mut self, _channel: &NamePath, message: &DataMessage, receipt_ms: u64) {
        self.last = Some(StampedReceipt {
            stamp_ms: message.stamp_ms,
            receipt_ms,
        });
    }

    fn step(&mut self, now_ms: u64) -> DiagnosticStatus {
        latency_step(&self.cfg, self.last, now_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path;

    fn cfg() -> LatencyMonitorConfig {
        LatencyMonitorConfig {
            name: path!("/perception/costmap_delay"),
            channel: path!("/perception/costmap"),
            warn_above_s: 0.1,
            error_above_s: 0.3,
        }
    }

    fn at(stamp_ms: u64, receipt_ms: u64) -> Option<StampedReceipt> {
        Some(StampedReceipt {
            stamp_ms,
            receipt_ms,
        })
    }

    #[test]
    fn examples() {
        assert_eq!(latency_step(&cfg(), at(10_000, 10_050), 10_050).state, DiagnosticState::Ok);
        assert_eq!(latency_step(&cfg(), at(10_000, 10_400), 10_400).state, DiagnosticState::Error);
        assert_eq!(latency_step(&cfg(), at(10_000, 10_200), 10_200).state, DiagnosticState::Warning);
        assert_eq!(latency_step(&cfg(), None, 0).state, DiagnosticState::Unknown);
    }

    #[test]
    fn clock_skew_is_warning() {
        let s = latency_step(&cfg(), at(10_100, 10_000), 10_000);
        assert_eq!(s.state, DiagnosticState::Warning);
        assert_eq!(s.message, "clock skew");
    }
}
