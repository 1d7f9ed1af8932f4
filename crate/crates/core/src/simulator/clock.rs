/// Simulated time in milliseconds, advanced in fixed ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VirtualClock {
    now_ms: u64,
    tick_ms: u64,
}

impl VirtualClock {
    pub fn new(tick_ms: u64) -> Self {
        assert!(tick_ms > 0, "tick_ms must be > 0");
        VirtualClock { now_ms: 0, tick_ms }
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    pub fn tick_ms(&self) -> u64 {
        self.tick_ms
    }

    pub fn advance(&mut self) -> u64 {
        self.now_ms += self.tick_ms;
        self.now_ms
    }

    /// Advances `ticks` whole ticks at once.
    pub fn advance_by(&mut self, ticks: u64) -> u64 {
        self.now_ms += self.tick_ms * ticks;
        self.now_ms
    }
}
