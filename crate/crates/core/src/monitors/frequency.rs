use serde::{Deserialize, Serialize};

use super::{secs_to_ms, window::ObservationWindow, Monitor};
use crate::{DataMessage, DiagnosticState, DiagnosticStatus, MonitorTaxonomy, NamePath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMonitorConfig {
    pub name: NamePath,
    pub channel: NamePath,
    pub window_s: f64,
    pub warn_below_hz: f64,
    pub error_below_hz: f64,
}

impl FrequencyMonitorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.window_s > 0.0) {
            return Err(format!("window_s must be > 0, got {}", self.window_s));
        }
        if !(0.0 <= self.error_below_hz && self.error_below_hz < self.warn_below_hz) {
            return Err(format!(
                "thresholds must satisfy 0 <= error_below_hz < warn_below_hz, got {} / {}",
                self.error_below_hz, self.warn_below_hz
            ));
        }
        Ok(())
    }
}

/// Measures the message rate over the sliding window ending at `now`.
pub fn frequency_step(
    cfg: &FrequencyMonitorConfig,
    window: &mut ObservationWindow,
    now_ms: u64,
) -> DiagnosticStatus {
    window.evict(now_ms);
    let count = window.count_at(now_ms);
    let measured_hz = count as f64 / cfg.window_s;
    let state = if measured_hz < cfg.error_below_hz {
        DiagnosticState::Error
    } else if measured_hz < cfg.warn_below_hz {
        DiagnosticState::Warning
    } else {
        DiagnosticState::Ok
    };
    let message = match state {
        DiagnosticState::Ok => String::new(),
        _ => format!("rate {measured_hz:.3} Hz on {}", cfg.channel),
    };
    DiagnosticStatus::new(cfg.name.clone(), state, now_ms)
        .with_message(message)
        .with_value("measured_hz", format!("{measured_hz:.3}"))
}

/// Frequency monitor with a start-up phase: until one full window has been
/// observed the rate is not meaningful and the monitor reports UNKNOWN.
#[derive(Debug, Clone)]
pub struct FrequencyMonitor {
    cfg: FrequencyMonitorConfig,
    window: ObservationWindow,
    started_ms: Option<u64>,
}

impl FrequencyMonitor {
    pub fn new(cfg: FrequencyMonitorConfig) -> Self {
        let window = ObservationWindow::new(secs_to_ms(cfg.window_s).max(1));
        FrequencyMonitor {
            cfg,
            window,
            started_ms: None,
        }
    }
}

impl Monitor for FrequencyMonitor {
    fn name(&self) -> &NamePath {
        &self.cfg.name
    }

    fn taxonomy(&self) -> MonitorTaxonomy {
        MonitorTaxonomy::ISOLATED_META
    }

    fn channels(&self) -> Vec<NamePath> {
        vec![self.cfg.channel.clone()]
    }

    fn observe(&mut self, _channel: &NamePath, _message: &DataMessage, receipt_ms: u64) {
        self.window.push(receipt_ms, ());
    }

    fn step(&mut self, now_ms: u64) -> DiagnosticStatus {
        let started = *self.started_ms.get_or_insert(now_ms);
        if now_ms - started < self.window.window_ms() {
            self.window.evict(now_ms);
            return DiagnosticStatus::new(self.cfg.name.clone(), DiagnosticState::Unknown, now_ms)
                .with_message("warming up");
        }
        frequency_step(&self.cfg, &mut self.window, now_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path;
    use proptest::prelude::*;

    fn cfg() -> FrequencyMonitorConfig {
        FrequencyMonitorConfig {
            name: path!("/sensors/velodyne_packet_alive"),
            channel: path!("/sensors/velodyne_points"),
            window_s: 1.0,
            warn_below_hz: 8.0,
            error_below_hz: 4.0,
        }
    }

    /// Independent brute-force counter over the half-open window.
    fn oracle_count(stamps: &[u64], now: u64, window_ms: u64) -> usize {
        stamps
            .iter()
            .filter(|&&t| t + window_ms > now && t <= now)
            .count()
    }

    fn oracle_state(count: usize, cfg: &FrequencyMonitorConfig) -> DiagnosticState {
        let hz = count as f64 / cfg.window_s;
        if hz < cfg.error_below_hz {
            DiagnosticState::Error
        } else if hz < cfg.warn_below_hz {
            DiagnosticState::Warning
        } else {
            DiagnosticState::Ok
        }
    }

    // Times are shifted by +10 s so the stream (t = -0.9 .. 0.0 s) is
    // representable in unsigned milliseconds.
    const T0: u64 = 10_000;

    fn stream() -> Vec<u64> {
        (0..10).map(|k| T0 - 900 + 100 * k).collect()
    }

    fn run(now: u64) -> DiagnosticStatus {
        let c = cfg();
        let mut w = ObservationWindow::new(1000);
        for t in stream() {
            w.push(t, ());
        }
        frequency_step(&c, &mut w, now)
    }

    #[test]
    fn full_rate_is_ok() {
        assert_eq!(oracle_count(&stream(), T0, 1000), 10);
        let s = run(T0);
        assert_eq!(s.state, DiagnosticState::Ok);
        assert_eq!(s.values["measured_hz"], "10.000");
    }

    #[test]
    fn half_window_after_stop_is_warning() {
        let n = oracle_count(&stream(), T0 + 500, 1000);
        assert_eq!(n, 5);
        let s = run(T0 + 500);
        assert_eq!(s.values["measured_hz"], "5.000");
        assert_eq!(s.state, DiagnosticState::Warning);
    }

    #[test]
    fn empty_window_is_error() {
        assert_eq!(oracle_count(&stream(), T0 + 1500, 1000), 0);
        let s = run(T0 + 1500);
        assert_eq!(s.values["measured_hz"], "0.000");
        assert_eq!(s.state, DiagnosticState::Error);
    }

    #[test]
    fn warm_up_reports_unknown() {
        let mut m = FrequencyMonitor::new(cfg());
        let msg = DataMessage::new(0);
        m.observe(&path!("/sensors/velodyne_points"), &msg, 0);
        assert_eq!(m.step(0).state, DiagnosticState::Unknown);
        for t in (100..=1000).step_by(100) {
            m.observe(&path!("/sensors/velodyne_points"), &msg, t);
        }
        assert_eq!(m.step(1000).state, DiagnosticState::Ok);
    }

    #[test]
    fn validation() {
        assert!(cfg().validate().is_ok());
        let mut bad = cfg();
        bad.error_below_hz = 9.0;
        assert!(bad.validate().is_err());
        bad = cfg();
        bad.window_s = 0.0;
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn matches_oracle(mut stamps in proptest::collection::vec(0u64..5000, 0..80), now in 0u64..6000) {
            stamps.sort_unstable();
            let c = cfg();
            let mut w = ObservationWindow::new(1000);
            for &t in &stamps { w.push(t, ()); }
            let s = frequency_step(&c, &mut w, now);
            let expected = oracle_count(&stamps, now, 1000);
            prop_assert_eq!(s.state, oracle_state(expected, &c));
            prop_assert_eq!(&s.values["measured_hz"], &format!("{:.3}", expected as f64));
        }

        /// Removing messages never moves the state toward OK.
        #[test]
        fn monotone_in_rate(mut stamps in proptest::collection::vec(0u64..3000, 1..60), drop_mask in proptest::collection::vec(any::<bool>(), 60), now in 0u64..3500) {
            stamps.sort_unstable();
            let c = cfg();
            let thinned: Vec<u64> = stamps.iter().zip(&drop_mask).filter(|(_, d)| !**d).map(|(t, _)| *t).collect();
            let mut full = ObservationWindow::new(1000);
            for &t in &stamps { full.push(t, ()); }
            let mut thin = ObservationWindow::new(1000);
            for &t in &thinned { thin.push(t, ()); }
            let a = frequency_step(&c, &mut full, now).state.severity_rank().unwrap();
            let b = frequency_step(&c, &mut thin, now).state.severity_rank().unwrap();
            prop_assert!(b >= a);
        }
    }
}
