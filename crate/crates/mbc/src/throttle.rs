//! Outbound call pacing and retry with exponential backoff.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use crate::providers::ProviderError;

/// Token bucket with capacity one: callers are spaced at least
/// `1 / requests_per_second` apart, across threads.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64) -> Self {
        let interval = if requests_per_second > 0.0 && requests_per_second.is_finite() {
            Duration::from_secs_f64(1.0 / requests_per_second)
        } else {
            Duration::ZERO
        };
        Self { interval, next_slot: Mutex::new(None) }
    }

    pub fn unlimited() -> Self {
        Self::new(0.0)
    }

    /// Blocks until the caller may issue its request.
    pub fn acquire(&self) {
        if self.interval.is_zero() {
            return;
        }
        let wait = {
            let mut next = self.next_slot.lock().unwrap_or_else(|p| p.into_inner());
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, base_delay: Duration::from_secs(1), jitter: true }
    }
}

impl RetryPolicy {
    pub fn immediate(attempts: u32) -> Self {
        Self { attempts, base_delay: Duration::ZERO, jitter: false }
    }

    fn delay(&self, attempt: u32) -> Duration {
        let base = self.base_delay.saturating_mul(1 << attempt.min(16));
        if self.jitter && !base.is_zero() {
            base.mul_f64(1.0 + rand::random::<f64>() * 0.5)
        } else {
            base
        }
    }

    /// Runs `op` until it succeeds, fails permanently, or attempts run out.
    /// Only transport failures are retried.
    pub fn run<T>(&self, mut op: impl FnMut() -> Result<T, ProviderError>) -> Result<T, ProviderError> {
        let attempts = self.attempts.max(1);
        let mut attempt = 0;
        loop {
            match op() {
                Err(e) if e.is_transient() && attempt + 1 < attempts => {
                    log::debug!("attempt {} failed: {e}", attempt + 1);
                    thread::sleep(self.delay(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}
