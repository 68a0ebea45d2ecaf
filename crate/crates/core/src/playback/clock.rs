use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

/// Cancellation flag that sleeping streams can wait on.
#[derive(Debug, Default)]
pub struct StopSignal {
    stopped: Mutex<bool>,
    cv: Condvar,
}

impl StopSignal {
    pub fn new() -> StopSignal {
        StopSignal::default()
    }

    pub fn set(&self) {
        *self.stopped.lock().unwrap() = true;
        self.cv.notify_all();
    }

    pub fn is_set(&self) -> bool {
        *self.stopped.lock().unwrap()
    }

    /// Waits up to `timeout`; returns `true` if the signal is set.
    pub fn wait_timeout(&self, timeout: Duration) -> bool {
        let guard = self.stopped.lock().unwrap();
        let (guard, _) = self
            .cv
            .wait_timeout_while(guard, timeout, |stopped| !*stopped)
            .unwrap();
        *guard
    }
}

/// Time source for playback. `now` is measured from the clock's own origin.
pub trait Clock: Send + Sync {
    fn now(&self) -> Duration;

    /// Sleeps until `deadline`. Returns `false` if `stop` fired first.
    fn sleep_until(&self, deadline: Duration, stop: &StopSignal) -> bool;

    /// Called once for each stream before it starts and once when it ends.
    fn attach(&self) {}
    fn detach(&self) {}
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> SystemClock {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep_until(&self, deadline: Duration, stop: &StopSignal) -> bool {
        loop {
            let now = self.now();
            if now >= deadline {
                return !stop.is_set();
            }
            if stop.wait_timeout(deadline - now) {
                return false;
            }
        }
    }
}

#[derive(Debug, Default)]
struct ManualState {
    now: Duration,
    attached: usize,
    next_id: u64,
    sleepers: Vec<(u64, Duration)>,
}

impl ManualState {
    fn settled(&self) -> bool {
        let parked = self.sleepers.iter().filter(|(_, d)| *d > self.now).count();
        parked == self.attached
    }
}

/// Virtual clock for tests. Time moves only through [`ManualClock::advance_to`]
/// or [`ManualClock::run_until_idle`], which also wait for every attached
/// stream to go back to sleep, so traces are exact and reproducible.
#[derive(Debug, Default)]
pub struct ManualClock {
    state: Mutex<ManualState>,
    cv: Condvar,
}

const POLL: Duration = Duration::from_millis(1);

impl ManualClock {
    pub fn new() -> ManualClock {
        ManualClock::default()
    }

    /// Blocks until every attached stream sleeps past the current time or has detached.
    pub fn settle(&self) {
        let guard = self.state.lock().unwrap();
        let _guard = self.cv.wait_while(guard, |s| !s.settled()).unwrap();
    }

    pub fn advance_to(&self, t: Duration) {
        self.settle();
        {
            let mut s = self.state.lock().unwrap();
            if t > s.now {
                s.now = t;
            }
        }
        self.cv.notify_all();
        self.settle();
    }

    pub fn advance_by(&self, d: Duration) {
        let t = self.now() + d;
        self.advance_to(t);
    }

    /// Earliest pending wake-up after the current time.
    pub fn next_deadline(&self) -> Option<Duration> {
        let s = self.state.lock().unwrap();
        s.sleepers
            .iter()
            .map(|(_, d)| *d)
            .filter(|d| *d > s.now)
            .min()
    }

    /// Jumps from deadline to deadline until nothing is left sleeping.
    pub fn run_until_idle(&self) {
        self.settle();
        while let Some(d) = self.next_deadline() {
            self.advance_to(d);
        }
    }

    /// Like [`ManualClock::run_until_idle`] but never moves past `limit`.
    pub fn run_until(&self, limit: Duration) {
        self.settle();
        while let Some(d) = self.next_deadline().filter(|d| *d <= limit) {
            self.advance_to(d);
        }
        self.advance_to(limit);
    }

    pub fn attached(&self) -> usize {
        self.state.lock().unwrap().attached
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        self.state.lock().unwrap().now
    }

    fn sleep_until(&self, deadline: Duration, stop: &StopSignal) -> bool {
        let mut s = self.state.lock().unwrap();
        if s.now >= deadline {
            return !stop.is_set();
        }
        let id = s.next_id;
        s.next_id += 1;
        s.sleepers.push((id, deadline));
        self.cv.notify_all();
        let reached = loop {
            if s.now >= deadline {
                break true;
            }
            if stop.is_set() {
                break false;
            }
            s = self.cv.wait_timeout(s, POLL).unwrap().0;
        };
        s.sleepers.retain(|(i, _)| *i != id);
        drop(s);
        self.cv.notify_all();
        reached && !stop.is_set()
    }

    fn attach(&self) {
        self.state.lock().unwrap().attached += 1;
        self.cv.notify_all();
    }

    fn detach(&self) {
        let mut s = self.state.lock().unwrap();
        s.attached = s.attached.saturating_sub(1);
        drop(s);
        self.cv.notify_all();
    }
}
