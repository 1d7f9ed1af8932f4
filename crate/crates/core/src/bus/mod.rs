//! In-process publish/subscribe bus, wire codec and command types.
//!
//! Delivery contract: each subscriber sees messages of one channel in
//! publish order. Nothing is replayed to late subscribers. Queues are
//! bounded and drop their oldest entry on overflow, so a slow consumer
//! never blocks a publisher.

mod command;
pub mod wire;

pub use command::Command;
pub use wire::{decode, encode, Body, DecodeError, Envelope, Kind};

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, Weak};
use std::time::Duration;

use crate::{path, DiagnosticState, DiagnosticStatus, NamePath};

pub const DEFAULT_QUEUE_CAPACITY: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelFilter {
    All,
    /// Channels at or below this namespace.
    Prefix(NamePath),
    Exact(NamePath),
}

impl ChannelFilter {
    pub fn matches(&self, channel: &NamePath) -> bool {
        match self {
            ChannelFilter::All => true,
            ChannelFilter::Prefix(p) => channel.starts_with(p),
            ChannelFilter::Exact(c) => channel == c,
        }
    }
}

struct Queue {
    filter: ChannelFilter,
    capacity: usize,
    items: Mutex<VecDeque<Envelope>>,
    ready: Condvar,
    dropped: AtomicU64,
}

#[derive(Default)]
struct BusInner {
    subscribers: Mutex<Vec<Weak<Queue>>>,
    published: AtomicU64,
    dropped: AtomicU64,
}

#[derive(Clone, Default)]
pub struct Bus {
    inner: Arc<BusInner>,
}

impl std::fmt::Debug for Bus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Bus")
            .field("published", &self.published_total())
            .field("dropped", &self.dropped_total())
            .finish()
    }
}

impl Bus {
    pub fn new() -> Self {
        Bus::default()
    }

    pub fn publish(&self, envelope: Envelope) {
        self.inner.published.fetch_add(1, Ordering::Relaxed);
        let mut subs = self.inner.subscribers.lock().expect("bus lock");
        subs.retain(|weak| weak.strong_count() > 0);
        for queue in subs.iter().filter_map(Weak::upgrade) {
            if !queue.filter.matches(&envelope.channel) {
                continue;
            }
            let mut items = queue.items.lock().expect("queue lock");
            if items.len() >= queue.capacity {
                items.pop_front();
                queue.dropped.fetch_add(1, Ordering::Relaxed);
                self.inner.dropped.fetch_add(1, Ordering::Relaxed);
            }
            items.push_back(envelope.clone());
            queue.ready.notify_one();
        }
    }

    pub fn subscribe(&self, filter: ChannelFilter) -> Subscription {
        self.subscribe_with_capacity(filter, DEFAULT_QUEUE_CAPACITY)
    }

    pub fn subscribe_with_capacity(&self, filter: ChannelFilter, capacity: usize) -> Subscription {
        let queue = Arc::new(Queue {
            filter,
            capacity: capacity.max(1),
            items: Mutex::new(VecDeque::new()),
            ready: Condvar::new(),
            dropped: AtomicU64::new(0),
        });
        self.inner
            .subscribers
            .lock()
            .expect("bus lock")
            .push(Arc::downgrade(&queue));
        Subscription { queue }
    }

    pub fn published_total(&self) -> u64 {
        self.inner.published.load(Ordering::Relaxed)
    }

    pub fn dropped_total(&self) -> u64 {
        self.inner.dropped.load(Ordering::Relaxed)
    }
}

/// A subscriber's private queue. Dropping it unsubscribes.
pub struct Subscription {
    queue: Arc<Queue>,
}

impl Subscription {
    pub fn try_recv(&self) -> Option<Envelope> {
        self.queue.items.lock().expect("queue lock").pop_front()
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Option<Envelope> {
        let items = self.queue.items.lock().expect("queue lock");
        let (mut items, _) = self
            .queue
            .ready
            .wait_timeout_while(items, timeout, |q| q.is_empty())
            .expect("queue lock");
        items.pop_front()
    }

    pub fn drain(&self) -> Vec<Envelope> {
        self.queue.items.lock().expect("queue lock").drain(..).collect()
    }

    pub fn len(&self) -> usize {
        self.queue.items.lock().expect("queue lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dropped(&self) -> u64 {
        self.queue.dropped.load(Ordering::Relaxed)
    }
}

/// Turns the bus drop counter into a `/diag/bus` status.
#[derive(Debug, Clone)]
pub struct BusHealth {
    /// Drops per second above which the bus reports WARNING.
    pub max_drop_rate_hz: f64,
    last: Option<(u64, u64)>,
}

impl BusHealth {
    pub fn new(max_drop_rate_hz: f64) -> Self {
        BusHealth {
            max_drop_rate_hz,
            last: None,
        }
    }

    pub fn step(&mut self, bus: &Bus, now_ms: u64) -> DiagnosticStatus {
        let dropped = bus.dropped_total();
        let (prev_ms, prev_dropped) = self.last.unwrap_or((now_ms, dropped));
        self.last = Some((now_ms, dropped));
        let elapsed_s = now_ms.saturating_sub(prev_ms) as f64 / 1000.0;
        let rate = if elapsed_s > 0.0 {
            (dropped - prev_dropped) as f64 / elapsed_s
        } else {
            0.0
        };
        let state = if rate > self.max_drop_rate_hz {
            DiagnosticState::Warning
        } else {
            DiagnosticState::Ok
        };
        DiagnosticStatus::new(path!("/diag/bus"), state, now_ms)
            .with_value("drop_rate_hz", format!("{rate:.3}"))
            .with_value("dropped_total", dropped.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DataMessage;

    fn msg(channel: &str, seq: u64) -> Envelope {
        Envelope::data(seq, NamePath::parse(channel).unwrap(), DataMessage::new(seq).with("seq", seq as f64))
    }

    fn seq(e: &Envelope) -> u64 {
        e.ts
    }

    #[test]
    fn late_subscriber_misses_earlier_messages() {
        let bus = Bus::new();
        bus.publish(msg("/a", 1));
        let sub = bus.subscribe(ChannelFilter::All);
        assert!(sub.try_recv().is_none());
        bus.publish(msg("/a", 2));
        assert_eq!(sub.try_recv().map(|e| seq(&e)), Some(2));
    }

    #[test]
    fn two_subscribers_receive_all_in_order() {
        let bus = Bus::new();
        let a = bus.subscribe(ChannelFilter::All);
        let b = bus.subscribe(ChannelFilter::Exact(path!("/x")));
        for i in 0..100 {
            bus.publish(msg("/x", i));
        }
        for sub in [&a, &b] {
            let got: Vec<u64> = sub.drain().iter().map(seq).collect();
            assert_eq!(got, (0..100).collect::<Vec<_>>());
        }
    }

    #[test]
    fn overflow_drops_oldest() {
        let bus = Bus::new();
        let sub = bus.subscribe_with_capacity(ChannelFilter::All, 16);
        for i in 0..32 {
            bus.publish(msg("/burst", i));
        }
        let got: Vec<u64> = sub.drain().iter().map(seq).collect();
        assert_eq!(got, (16..32).collect::<Vec<_>>());
        assert_eq!(sub.dropped(), 16);
        assert_eq!(bus.dropped_total(), 16);
    }

    #[test]
    fn filters_and_unsubscribe() {
        let bus = Bus::new();
        let sensors = bus.subscribe(ChannelFilter::Prefix(path!("/sensors")));
        let other = bus.subscribe(ChannelFilter::All);
        drop(other);
        bus.publish(msg("/sensors/lidar", 1));
        bus.publish(msg("/sensorsx/lidar", 2));
        assert_eq!(sensors.drain().len(), 1);
        assert_eq!(bus.inner.subscribers.lock().unwrap().len(), 1);
    }

    #[test]
    fn per_channel_fifo_across_threads() {
        let bus = Bus::new();
        let sub = bus.subscribe(ChannelFilter::All);
        let handles: Vec<_> = ["/p/a", "/p/b", "/p/c"]
            .into_iter()
            .map(|ch| {
                let bus = bus.clone();
                std::thread::spawn(move || {
                    for i in 0..200 {
                        bus.publish(msg(ch, i));
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let mut last = std::collections::HashMap::new();
        let all = sub.drain();
        assert_eq!(all.len(), 600);
        for e in all {
            let prev = last.insert(e.channel.clone(), e.ts);
            assert!(prev.is_none_or(|p| p < e.ts));
        }
    }

    #[test]
    fn recv_timeout_wakes_on_publish() {
        let bus = Bus::new();
        let sub = bus.subscribe(ChannelFilter::All);
        let publisher = {
            let bus = bus.clone();
            std::thread::spawn(move || {
                std::thread::sleep(Duration::from_millis(20));
                bus.publish(msg("/a", 7));
            })
        };
        let got = sub.recv_timeout(Duration::from_secs(5));
        publisher.join().unwrap();
        assert_eq!(got.map(|e| e.ts), Some(7));
        assert!(sub.recv_timeout(Duration::from_millis(1)).is_none());
    }

    #[test]
    fn health_warns_on_drop_rate() {
        let bus = Bus::new();
        let _slow = bus.subscribe_with_capacity(ChannelFilter::All, 1);
        let mut health = BusHealth::new(5.0);
        assert_eq!(health.step(&bus, 0).state, DiagnosticState::Ok);
        for i in 0..20 {
            bus.publish(msg("/a", i));
        }
        let s = health.step(&bus, 1000);
        assert_eq!(s.state, DiagnosticState::Warning);
        assert_eq!(s.values["dropped_total"], "19");
        assert_eq!(health.step(&bus, 2000).state, DiagnosticState::Ok);
    }
}
