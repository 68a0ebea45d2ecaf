//! Live playback of a piece as `K` staggered, unsynchronized streams.
//!
//! Every stream runs on its own thread against its own start time: stream
//! `i` sleeps `i * stagger_s`, notes its start, and then schedules each
//! event at `start + event_time`. Nothing couples the streams except the
//! output device, which accepts one whole message at a time. Scheduling
//! jitter between streams is left alone.

mod clock;
mod device;

pub use clock::{Clock, ManualClock, StopSignal, SystemClock};
pub use device::{
    list_ports, open_device, LogDevice, MidiOutput, NullDevice, RawPortDevice, RecordedMessage,
    RecordingDevice,
};

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use thiserror::Error;

use crate::generator::{GenParams, MScore, MAX_STREAMS};
use crate::midi::{
    self, apply_fadeout, render_stream, stream_channel, MidiKind, RenderError, TimingConfig,
    CC_ALL_NOTES_OFF, CC_VOLUME, FADE_START_VOLUME,
};

#[derive(Debug, Error)]
pub enum PlaybackError {
    #[error("MIDI output unavailable: {0}")]
    DeviceUnavailable(String),
    #[error("{k} streams requested, at most 15 are supported")]
    TooManyStreams { k: usize },
    #[error("nothing to play")]
    NoStreams,
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("failed to start stream thread: {0}")]
    Spawn(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaybackState {
    Playing,
    Stopping,
    Stopped,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PlaybackStatus {
    pub state: PlaybackState,
    pub elapsed_s: f64,
    /// Words started so far, per stream.
    pub progress: Vec<usize>,
    pub length_ms: usize,
}

struct Schedule {
    channel: u8,
    offset: Duration,
    events: Vec<(Duration, Vec<u8>, bool)>,
}

struct Lifecycle {
    state: PlaybackState,
    ended_at: Option<Duration>,
}

struct Inner {
    piece_id: String,
    clock: Arc<dyn Clock>,
    device: Mutex<Box<dyn MidiOutput>>,
    stop: StopSignal,
    started_at: Duration,
    channels: Vec<u8>,
    length_ms: usize,
    progress: Vec<AtomicUsize>,
    running: AtomicUsize,
    lifecycle: Mutex<Lifecycle>,
    lifecycle_cv: Condvar,
    handles: Mutex<Vec<JoinHandle<()>>>,
}

/// Handle to a running piece. Clones refer to the same session.
#[derive(Clone)]
pub struct PlaybackSession {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for PlaybackSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlaybackSession")
            .field("piece_id", &self.inner.piece_id)
            .field("state", &self.state())
            .finish()
    }
}

fn schedule_stream(
    m: &MScore,
    position: usize,
    params: &GenParams,
    timing: &TimingConfig,
) -> Result<Schedule, RenderError> {
    let channel = stream_channel(position);
    let rendered = render_stream(m, channel, timing)?;
    let track = apply_fadeout(&rendered.events, channel, timing, timing.fade_s);
    let mut starts = rendered.word_starts.iter().peekable();
    let events = track
        .iter()
        .map(|e| {
            let starts_word = matches!(e.kind, MidiKind::NoteOn { .. })
                && starts.next_if(|t| **t == e.tick).is_some();
            (timing.ticks_to_duration(e.tick), e.message(), starts_word)
        })
        .collect();
    Ok(Schedule {
        channel,
        offset: Duration::from_secs_f64(position as f64 * params.stagger_s),
        events,
    })
}

/// Starts playing `mscores` on `device`, one thread per stream.
pub fn play_piece(
    piece_id: impl Into<String>,
    mscores: &[MScore],
    params: &GenParams,
    timing: &TimingConfig,
    device: Box<dyn MidiOutput>,
    clock: Arc<dyn Clock>,
) -> Result<PlaybackSession, PlaybackError> {
    timing.validate()?;
    if mscores.is_empty() {
        return Err(PlaybackError::NoStreams);
    }
    if mscores.len() > MAX_STREAMS {
        return Err(PlaybackError::TooManyStreams { k: mscores.len() });
    }
    let schedules = mscores
        .iter()
        .enumerate()
        .map(|(i, m)| schedule_stream(m, i, params, timing))
        .collect::<Result<Vec<_>, _>>()?;

    let inner = Arc::new(Inner {
        piece_id: piece_id.into(),
        started_at: clock.now(),
        clock,
        device: Mutex::new(device),
        stop: StopSignal::new(),
        channels: schedules.iter().map(|s| s.channel).collect(),
        length_ms: params.length_ms,
        progress: schedules.iter().map(|_| AtomicUsize::new(0)).collect(),
        running: AtomicUsize::new(schedules.len()),
        lifecycle: Mutex::new(Lifecycle {
            state: PlaybackState::Playing,
            ended_at: None,
        }),
        lifecycle_cv: Condvar::new(),
        handles: Mutex::new(Vec::new()),
    });

    let mut handles = Vec::with_capacity(schedules.len());
    for (i, schedule) in schedules.into_iter().enumerate() {
        inner.clock.attach();
        let stream_inner = inner.clone();
        let spawned = thread::Builder::new()
            .name(format!("stream-{i}"))
            .spawn(move || run_stream(&stream_inner, i, schedule));
        match spawned {
            Ok(h) => handles.push(h),
            Err(e) => {
                // Unwind the streams already started.
                inner.clock.detach();
                *inner.handles.lock().unwrap() = handles;
                let session = PlaybackSession { inner };
                session.stop();
                return Err(e.into());
            }
        }
    }
    *inner.handles.lock().unwrap() = handles;
    Ok(PlaybackSession { inner })
}

fn run_stream(inner: &Inner, index: usize, schedule: Schedule) {
    let clock = &inner.clock;
    if clock.sleep_until(inner.started_at + schedule.offset, &inner.stop) {
        let own_start = clock.now();
        for (at, bytes, starts_word) in &schedule.events {
            if !clock.sleep_until(own_start + *at, &inner.stop) {
                break;
            }
            let mut device = inner.device.lock().unwrap();
            if inner.stop.is_set() {
                break;
            }
            if let Err(e) = device.send(bytes) {
                report_write_error(index, &e);
            }
            if *starts_word {
                inner.progress[index].fetch_add(1, Ordering::SeqCst);
            }
        }
    }
    if inner.running.fetch_sub(1, Ordering::SeqCst) == 1 {
        let mut life = inner.lifecycle.lock().unwrap();
        if life.state == PlaybackState::Playing {
            life.state = PlaybackState::Stopped;
            life.ended_at = Some(clock.now());
            inner.lifecycle_cv.notify_all();
        }
    }
    clock.detach();
}

fn report_write_error(index: usize, e: &std::io::Error) {
    eprintln!("stream {index}: MIDI write failed: {e}");
}

impl PlaybackSession {
    pub fn piece_id(&self) -> &str {
        &self.inner.piece_id
    }

    pub fn state(&self) -> PlaybackState {
        self.inner.lifecycle.lock().unwrap().state
    }

    pub fn status(&self) -> PlaybackStatus {
        let life = self.inner.lifecycle.lock().unwrap();
        let end = life.ended_at.unwrap_or_else(|| self.inner.clock.now());
        PlaybackStatus {
            state: life.state,
            elapsed_s: end.saturating_sub(self.inner.started_at).as_secs_f64(),
            progress: self
                .inner
                .progress
                .iter()
                .map(|p| p.load(Ordering::SeqCst))
                .collect(),
            length_ms: self.inner.length_ms,
        }
    }

    /// Halts every stream and silences the used channels. Safe to call from
    /// any thread, any number of times.
    pub fn stop(&self) -> PlaybackState {
        {
            let mut life = self.inner.lifecycle.lock().unwrap();
            match life.state {
                PlaybackState::Stopped => return PlaybackState::Stopped,
                PlaybackState::Playing => life.state = PlaybackState::Stopping,
                PlaybackState::Stopping => {}
            }
        }
        self.silence();
        let handles = std::mem::take(&mut *self.inner.handles.lock().unwrap());
        let current = thread::current().id();
        for h in handles {
            if h.thread().id() != current {
                let _ = h.join();
            }
        }
        let mut life = self.inner.lifecycle.lock().unwrap();
        if life.state != PlaybackState::Stopped {
            life.state = PlaybackState::Stopped;
            life.ended_at = Some(self.inner.clock.now());
        }
        self.inner.lifecycle_cv.notify_all();
        life.state
    }

    fn silence(&self) {
        let mut device = self.inner.device.lock().unwrap();
        if self.inner.stop.is_set() {
            return;
        }
        self.inner.stop.set();
        let channels: BTreeSet<u8> = self.inner.channels.iter().copied().collect();
        for ch in channels {
            for (controller, value) in [(CC_ALL_NOTES_OFF, 0), (CC_VOLUME, FADE_START_VOLUME)] {
                let msg = midi::MidiEvent {
                    tick: 0,
                    channel: ch,
                    kind: MidiKind::ControlChange { controller, value },
                }
                .message();
                if let Err(e) = device.send(&msg) {
                    report_write_error(ch as usize, &e);
                }
            }
        }
    }

    /// Blocks until the session reaches `Stopped`.
    pub fn wait(&self) -> PlaybackState {
        let life = self.inner.lifecycle.lock().unwrap();
        let life = self
            .inner
            .lifecycle_cv
            .wait_while(life, |l| l.state != PlaybackState::Stopped)
            .unwrap();
        life.state
    }

    /// Like [`PlaybackSession::wait`] with a timeout; returns the state reached.
    pub fn wait_timeout(&self, timeout: Duration) -> PlaybackState {
        let life = self.inner.lifecycle.lock().unwrap();
        let (life, _) = self
            .inner
            .lifecycle_cv
            .wait_timeout_while(life, timeout, |l| l.state != PlaybackState::Stopped)
            .unwrap();
        life.state
    }
}
