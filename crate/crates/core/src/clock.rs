use std::sync::atomic::{AtomicI64, Ordering};

use chrono::{DateTime, TimeZone, Utc};

/// Source of UTC timestamps for everything the platform records.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Deterministic clock that advances one second per reading.
#[derive(Debug)]
pub struct SteppingClock {
    next: AtomicI64,
}

impl SteppingClock {
    pub fn starting_at(epoch_seconds: i64) -> Self {
        SteppingClock {
            next: AtomicI64::new(epoch_seconds),
        }
    }
}

impl Default for SteppingClock {
    fn default() -> Self {
        // 2025-01-06T09:00:00Z
        Self::starting_at(1_736_154_000)
    }
}

impl Clock for SteppingClock {
    fn now(&self) -> DateTime<Utc> {
        let secs = self.next.fetch_add(1, Ordering::SeqCst);
        Utc.timestamp_opt(secs, 0).single().expect("timestamp in range")
    }
}

/// Timestamps are stored with microsecond precision so that their textual
/// form is stable under a serialize/parse round trip.
pub fn truncate_micros(at: DateTime<Utc>) -> DateTime<Utc> {
    let micros = at.timestamp_micros();
    Utc.timestamp_micros(micros).single().unwrap_or(at)
}
