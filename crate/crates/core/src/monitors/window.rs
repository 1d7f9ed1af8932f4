use std::collections::VecDeque;

/// Time-bounded ring of observations.
///
/// Holds entries with timestamps in the half-open interval
/// `(now - window, now]` once [`ObservationWindow::evict`] has run.
#[derive(Debug, Clone)]
pub struct ObservationWindow<T = ()> {
    window_ms: u64,
    entries: VecDeque<(u64, T)>,
}

impl<T> ObservationWindow<T> {
    pub fn new(window_ms: u64) -> Self {
        assert!(window_ms > 0, "window must be positive");
        ObservationWindow {
            window_ms,
            entries: VecDeque::new(),
        }
    }

    pub fn window_ms(&self) -> u64 {
        self.window_ms
    }

    /// Appends an observation. Returns `false` and drops it if it is older
    /// than the newest entry.
    pub fn push(&mut self, timestamp_ms: u64, payload: T) -> bool {
        if self.entries.back().is_some_and(|(last, _)| *last > timestamp_ms) {
            return false;
        }
        self.entries.push_back((timestamp_ms, payload));
        true
    }

    /// Drops every entry at or before `now - window`.
    pub fn evict(&mut self, now_ms: u64) {
        let Some(cutoff) = now_ms.checked_sub(self.window_ms) else {
            return;
        };
        while self.entries.front().is_some_and(|(ts, _)| *ts <= cutoff) {
            self.entries.pop_front();
        }
    }

    /// Number of entries in `(now - window, now]`.
    pub fn count_at(&self, now_ms: u64) -> usize {
        let lower = now_ms as i128 - self.window_ms as i128;
        self.entries
            .iter()
            .filter(|(ts, _)| (*ts as i128) > lower && *ts <= now_ms)
            .count()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(u64, T)> {
        self.entries.iter()
    }
}
