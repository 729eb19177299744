//! Shared sliding-window request gate.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Time source for the limiter so tests can run on a virtual clock.
pub trait Clock: Send + Sync {
    fn now(&self) -> Instant;
    fn sleep(&self, duration: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Instant {
        Instant::now()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration)
    }
}

/// Requests-per-second ceilings of the retrieval service.
pub const RATE_WITHOUT_KEY: u32 = 3;
pub const RATE_WITH_KEY: u32 = 10;

/// Admits at most `max_requests` acquisitions in any sliding window of
/// length `window`. All workers share one instance.
pub struct RateLimiter<C: Clock = SystemClock> {
    max_requests: u32,
    window: Duration,
    issued: Mutex<VecDeque<Instant>>,
    clock: C,
}

impl RateLimiter<SystemClock> {
    pub fn per_second(max_requests: u32) -> Self {
        Self::with_clock(max_requests, Duration::from_secs(1), SystemClock)
    }

    /// Default ceiling for the given credential state.
    pub fn for_api_key(has_key: bool) -> Self {
        Self::per_second(if has_key { RATE_WITH_KEY } else { RATE_WITHOUT_KEY })
    }
}

impl<C: Clock> RateLimiter<C> {
    pub fn with_clock(max_requests: u32, window: Duration, clock: C) -> Self {
        assert!(max_requests > 0, "rate limit must admit at least one request");
        Self {
            max_requests,
            window,
            issued: Mutex::new(VecDeque::new()),
            clock,
        }
    }

    pub fn max_requests(&self) -> u32 {
        self.max_requests
    }

    /// Blocks until a request may be issued and returns the admission time.
    pub fn acquire(&self) -> Instant {
        loop {
            let wait = {
                let mut issued = self.issued.lock().unwrap_or_else(|p| p.into_inner());
                let now = self.clock.now();
                while let Some(&front) = issued.front() {
                    if now.duration_since(front) >= self.window {
                        issued.pop_front();
                    } else {
                        break;
                    }
                }
                if issued.len() < self.max_requests as usize {
                    issued.push_back(now);
                    return now;
                }
                let oldest = *issued.front().expect("non-empty when full");
                self.window - now.duration_since(oldest)
            };
            self.clock.sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    /// Virtual clock: `sleep` advances time instantly.
    struct FakeClock {
        start: Instant,
        offset: Mutex<Duration>,
    }

    impl Clock for Arc<FakeClock> {
        fn now(&self) -> Instant {
            self.start + *self.offset.lock().unwrap()
        }
        fn sleep(&self, d: Duration) {
            *self.offset.lock().unwrap() += d;
        }
    }

    fn max_in_any_window(times: &[Instant], window: Duration) -> usize {
        let mut sorted = times.to_vec();
        sorted.sort();
        (0..sorted.len())
            .map(|i| {
                sorted[i..]
                    .iter()
                    .take_while(|t| t.duration_since(sorted[i]) < window)
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn never_exceeds_ceiling_in_any_window() {
        let clock = Arc::new(FakeClock {
            start: Instant::now(),
            offset: Mutex::new(Duration::ZERO),
        });
        let limiter = RateLimiter::with_clock(3, Duration::from_secs(1), clock.clone());
        let times: Vec<Instant> = (0..40).map(|_| limiter.acquire()).collect();
        assert_eq!(max_in_any_window(&times, Duration::from_secs(1)), 3);
        // 40 requests at 3/s need at least 13 full windows
        assert!(clock.now().duration_since(clock.start) >= Duration::from_secs(13));
    }

    #[test]
    fn shared_across_threads() {
        let limiter = Arc::new(RateLimiter::with_clock(
            5,
            Duration::from_millis(100),
            SystemClock,
        ));
        let times = Arc::new(Mutex::new(Vec::new()));
        std::thread::scope(|s| {
            for _ in 0..4 {
                let limiter = limiter.clone();
                let times = times.clone();
                s.spawn(move || {
                    for _ in 0..5 {
                        let t = limiter.acquire();
                        times.lock().unwrap().push(t);
                    }
                });
            }
        });
        let times = times.lock().unwrap();
        assert_eq!(times.len(), 20);
        assert!(max_in_any_window(&times, Duration::from_millis(100)) <= 5);
    }
}
