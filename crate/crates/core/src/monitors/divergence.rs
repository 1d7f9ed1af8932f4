use serde::{Deserialize, Serialize};

use super::{secs_to_ms, Monitor};
use crate::{DataMessage, DiagnosticState, DiagnosticStatus, MonitorTaxonomy, NamePath};

/// Compares two redundant 2-D position streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceMonitorConfig {
    pub name: NamePath,
    pub channel_a: NamePath,
    pub channel_b: NamePath,
    pub warn_above: f64,
    pub error_above: f64,
    pub pairing_window_s: f64,
}

impl DivergenceMonitorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 <= self.warn_above && self.warn_above < self.error_above) {
            return Err(format!(
                "thresholds must satisfy 0 <= warn_above < error_above, got {} / {}",
                self.warn_above, self.error_above
            ));
        }
        if !(self.pairing_window_s > 0.0) {
            return Err(format!("pairing_window_s must be > 0, got {}", self.pairing_window_s));
        }
        if self.channel_a == self.channel_b {
            return Err("channel_a and channel_b must differ".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSample {
    pub time_ms: u64,
    pub x: f64,
    pub y: f64,
}

impl PoseSample {
    pub fn from_message(message: &DataMessage, receipt_ms: u64) -> Option<Self> {
        Some(PoseSample {
            time_ms: receipt_ms,
            x: message.get("x")?.as_f64()?,
            y: message.get("y")?.as_f64()?,
        })
    }
}

/// A pair is usable when both samples lie within the pairing window of each
/// other and of `now`.
pub fn divergence_step(
    cfg: &DivergenceMonitorConfig,
    a: Option<PoseSample>,
    b: Option<PoseSample>,
    now_ms: u64,
) -> DiagnosticStatus {
    let window = secs_to_ms(cfg.pairing_window_s);
    let pair = match (a, b) {
        (Some(a), Some(b))
            if a.time_ms.abs_diff(b.time_ms) <= window
                && now_ms.saturating_sub(a.time_ms.min(b.time_ms)) <= window =>
        {
            Some((a, b))
        }
        _ => None,
    };
    let Some((a, b)) = pair else {
        return DiagnosticStatus::new(cfg.name.clone(), DiagnosticState::Unknown, now_ms)
            .with_message("no valid sample pair");
    };
    let d = (a.x - b.x).hypot(a.y - b.y);
    let state = if d > cfg.error_above {
        DiagnosticState::Error
    } else if d > cfg.warn_above {
        DiagnosticState::Warning
    } else {
        DiagnosticState::Ok
    };
    let message = match state {
        DiagnosticState::Ok => String::new(),
        _ => format!("{} and {} diverge by {d:.3} m", cfg.channel_a, cfg.channel_b),
    };
    DiagnosticStatus::new(cfg.name.clone(), state, now_ms)
        .with_message(message)
        .with_value("distance_m", format!("{d:.3}"))
}

#[derive(Debug, Clone)]
pub struct DivergenceMonitor {
    cfg: DivergenceMonitorConfig,
    a: Option<PoseSample>,
    b: Option<PoseSample>,
}

impl DivergenceMonitor {
    pub fn new(cfg: DivergenceMonitorConfig) -> Self {
        DivergenceMonitor { cfg, a: None, b: None }
    }
}

impl Monitor for DivergenceMonitor {
    fn name(&self) -> &NamePath {
        &self.cfg.name
    }

    fn taxonomy(&self) -> MonitorTaxonomy {
        MonitorTaxonomy::CONTEXTUAL_CONTENT_PARALLEL
    }

    fn channels(&self) -> Vec<NamePath> {
        vec![self.cfg.channel_a.clone(), self.cfg.channel_b.clone()]
    }

    fn observe(&mut self, channel: &NamePath, message: &DataMessage, receipt_ms: u64) {
        let Some(sample) = PoseSample::from_message(message, receipt_ms) else {
            return;
        };
        if *channel == self.cfg.channel_a {
            self.a = Some(sample);
        } else if *channel == self.cfg.channel_b {
            self.b = Some(sample);
        }
    }

    fn step(&mut self, now_ms: u64) -> DiagnosticStatus {
        divergence_step(&self.cfg, self.a, self.b, now_ms)
    }
}
