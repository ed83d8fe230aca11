//! Monotonic clocks. Production code uses [`MonotonicClock`]; tests inject a
//! [`FakeClock`] so rate metrics come out as exact values.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

pub trait Clock: Send + Sync {
    /// Time elapsed since the clock's origin. Never decreases.
    fn now(&self) -> Duration;
}

#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        MonotonicClock {
            origin: Instant::now(),
        }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

/// Returns `start`, `start + step`, `start + 2*step`, ... on successive calls.
#[derive(Debug)]
pub struct FakeClock {
    next_ns: AtomicU64,
    step_ns: u64,
}

impl FakeClock {
    pub fn new(start: Duration, step: Duration) -> Self {
        FakeClock {
            next_ns: AtomicU64::new(start.as_nanos() as u64),
            step_ns: step.as_nanos() as u64,
        }
    }
}

impl Clock for FakeClock {
    fn now(&self) -> Duration {
        Duration::from_nanos(self.next_ns.fetch_add(self.step_ns, Ordering::SeqCst))
    }
}
