//! Universal fault-diagnosis modules.
//!
//! Every monitor consumes data messages from one or more bus channels and
//! produces one [`DiagnosticStatus`] per evaluation tick. The built-in kinds
//! are declared in the graph config under `monitors:` with a `kind`
//! discriminator. Domain-specific diagnoses implement [`Monitor`] directly
//! and are registered with the simulator at run time.

mod divergence;
mod frequency;
mod latency;
mod self_state;
mod value;
mod watchdog;
pub mod window;

pub use divergence::{divergence_step, DivergenceMonitor, DivergenceMonitorConfig, PoseSample};
pub use frequency::{frequency_step, FrequencyMonitor, FrequencyMonitorConfig};
pub use latency::{latency_step, LatencyMonitor, LatencyMonitorConfig, StampedReceipt};
pub use self_state::{self_state_relay, ComponentReport, SelfStateConfig, SelfStateMonitor};
pub use value::{value_step, MalformedValue, ValueMonitor, ValueMonitorConfig, ValuePredicate};
pub use watchdog::{watchdog_step, WatchdogConfig, WatchdogMonitor};
pub use window::ObservationWindow;

use serde::{Deserialize, Serialize};

use crate::{DataMessage, DiagnosticStatus, MonitorTaxonomy, NamePath};

pub(crate) fn secs_to_ms(s: f64) -> u64 {
    (s * 1000.0).round().max(0.0) as u64
}

/// A diagnosis module driven by one evaluation loop.
pub trait Monitor: Send {
    fn name(&self) -> &NamePath;
    fn taxonomy(&self) -> MonitorTaxonomy;
    /// Channels whose messages must be passed to [`Monitor::observe`].
    fn channels(&self) -> Vec<NamePath>;
    fn observe(&mut self, channel: &NamePath, message: &DataMessage, receipt_ms: u64);
    fn step(&mut self, now_ms: u64) -> DiagnosticStatus;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonitorSpec {
    Frequency(FrequencyMonitorConfig),
    Latency(LatencyMonitorConfig),
    Value(ValueMonitorConfig),
    Watchdog(WatchdogConfig),
    SelfState(SelfStateConfig),
    Divergence(DivergenceMonitorConfig),
}

impl MonitorSpec {
    pub fn name(&self) -> &NamePath {
        match self {
            MonitorSpec::Frequency(c) => &c.name,
            MonitorSpec::Latency(c) => &c.name,
            MonitorSpec::Value(c) => &c.name,
            MonitorSpec::Watchdog(c) => &c.name,
            MonitorSpec::SelfState(c) => &c.name,
            MonitorSpec::Divergence(c) => &c.name,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            MonitorSpec::Frequency(c) => c.validate(),
            MonitorSpec::Latency(c) => c.validate(),
            MonitorSpec::Value(c) => c.validate(),
            MonitorSpec::Watchdog(c) => c.validate(),
            MonitorSpec::SelfState(_) => Ok(()),
            MonitorSpec::Divergence(c) => c.validate(),
        }
    }

    pub fn build(&self) -> Box<dyn Monitor> {
        match self.clone() {
            MonitorSpec::Frequency(c) => Box::new(FrequencyMonitor::new(c)),
            MonitorSpec::Latency(c) => Box::new(LatencyMonitor::new(c)),
            MonitorSpec::Value(c) => Box::new(ValueMonitor::new(c)),
            MonitorSpec::Watchdog(c) => Box::new(WatchdogMonitor::new(c)),
            MonitorSpec::SelfState(c) => Box::new(SelfStateMonitor::new(c)),
            MonitorSpec::Divergence(c) => Box::new(DivergenceMonitor::new(c)),
        }
    }
}

/// A leaf declaration in the graph config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorDecl {
    #[serde(flatten)]
    pub spec: MonitorSpec,
    /// Overrides the evaluation-wide staleness timeout for this leaf.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stale_after_ms: Option<u64>,
}

impl From<MonitorSpec> for MonitorDecl {
    fn from(spec: MonitorSpec) -> Self {
        MonitorDecl {
            spec,
            stale_after_ms: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{path, DiagnosticState};

    fn specs() -> Vec<MonitorSpec> {
        vec![
            MonitorSpec::Frequency(FrequencyMonitorConfig {
                name: path!("/m/freq"),
                channel: path!("/c/a"),
                window_s: 1.0,
                warn_below_hz: 8.0,
                error_below_hz: 4.0,
            }),
            MonitorSpec::Latency(LatencyMonitorConfig {
                name: path!("/m/lat"),
                channel: path!("/c/a"),
                warn_above_s: 0.1,
                error_above_s: 0.3,
            }),
            MonitorSpec::Watchdog(WatchdogConfig {
                name: path!("/m/wd"),
                target: path!("/c/a"),
                timeout_s: 0.5,
            }),
            MonitorSpec::Value(ValueMonitorConfig {
                name: path!("/m/val"),
                channel: path!("/c/a"),
                field: "v".into(),
                warn: Some(ValuePredicate::Above(1.0)),
                error: Some(ValuePredicate::Above(2.0)),
            }),
            MonitorSpec::SelfState(SelfStateConfig {
                name: path!("/m/self"),
                channel: path!("/c/a"),
            }),
            MonitorSpec::Divergence(DivergenceMonitorConfig {
                name: path!("/m/div"),
                channel_a: path!("/c/a"),
                channel_b: path!("/c/b"),
                warn_above: 0.3,
                error_above: 1.0,
                pairing_window_s: 0.5,
            }),
        ]
    }

    #[test]
    fn builtin_taxonomies() {
        let labels: Vec<_> = specs()
            .iter()
            .map(|s| s.build().taxonomy().classify().unwrap())
            .collect();
        assert_eq!(
            labels,
            [
                "isolated-meta",
                "isolated-meta",
                "isolated-meta",
                "isolated-content",
                "isolated-content",
                "contextual-content-parallel"
            ]
        );
    }

    fn drive(spec: &MonitorSpec) -> Vec<DiagnosticStatus> {
        let mut m = spec.build();
        let mut out = Vec::new();
        for t in (0u64..3000).step_by(100) {
            if t % 300 != 0 {
                let msg = DataMessage::new(t.saturating_sub(50))
                    .with("v", (t % 700) as f64 / 300.0)
                    .with("x", t as f64 / 1000.0)
                    .with("y", 0.0)
                    .with("state", if t % 500 == 0 { "WARNING" } else { "OK" });
                m.observe(&path!("/c/a"), &msg, t);
                if t % 200 == 0 {
                    m.observe(&path!("/c/b"), &msg.clone().with("y", 0.5), t);
                }
            }
            out.push(m.step(t));
        }
        out
    }

    #[test]
    fn monitors_are_deterministic() {
        for spec in specs() {
            let a = drive(&spec);
            let b = drive(&spec);
            assert_eq!(a, b, "{}", spec.name());
            assert!(a.iter().any(|s| s.state != DiagnosticState::Unknown), "{}", spec.name());
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        for spec in specs() {
            let decl = MonitorDecl::from(spec);
            let text = serde_json::to_string(&decl).unwrap();
            let back: MonitorDecl = serde_json::from_str(&text).unwrap();
            assert_eq!(back, decl);
            decl.spec.validate().unwrap();
        }
        let yaml = "kind: frequency\nname: /sensors/velodyne_packet_alive\nchannel: /sensors/velodyne_points\nwindow_s: 1.0\nwarn_below_hz: 8\nerror_below_hz: 4\nstale_after_ms: 500\n";
        let decl: MonitorDecl = serde_yaml::from_str(yaml).unwrap();
        assert_eq!(decl.stale_after_ms, Some(500));
        assert!(matches!(decl.spec, MonitorSpec::Frequency(_)));
    }
}
