use std::time::{Duration, Instant};

use relock_core::sat::Clock;

/// Monotonic wall clock started at construction.
#[derive(Clone, Copy, Debug)]
pub struct StdClock {
    start: Instant,
}

impl StdClock {
    pub fn start() -> Self {
        StdClock {
            start: Instant::now(),
        }
    }

    pub fn origin(&self) -> Instant {
        self.start
    }
}

impl Clock for StdClock {
    fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}
