//! The service-wide player: at most one session at a time, plus the
//! sequential "play all" queue.

use std::fmt;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use probmusic::generator::{GenParams, MScore};
use probmusic::midi::TimingConfig;
use probmusic::playback::{
    play_piece, Clock, MidiOutput, PlaybackError, PlaybackSession, PlaybackState, StopSignal,
};
use serde::Serialize;

/// Opens a fresh output for each session.
pub type DeviceFactory = Arc<dyn Fn() -> Result<Box<dyn MidiOutput>, PlaybackError> + Send + Sync>;

/// Silence between consecutive pieces of a play-all queue.
pub const QUEUE_GAP: Duration = Duration::from_secs(1);

/// A generated piece ready to be played.
#[derive(Debug, Clone)]
pub struct Performance {
    pub piece_id: String,
    pub params: GenParams,
    pub mscores: Vec<MScore>,
}

#[derive(Debug)]
pub enum PlayerError {
    Busy,
    Playback(PlaybackError),
}

impl fmt::Display for PlayerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayerError::Busy => f.write_str("already playing, stop first"),
            PlayerError::Playback(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for PlayerError {}

impl From<PlaybackError> for PlayerError {
    fn from(e: PlaybackError) -> Self {
        PlayerError::Playback(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerStatus {
    pub state: PlaybackState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub piece_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session_id: Option<u64>,
    pub elapsed_s: f64,
    pub progress: Vec<usize>,
    pub length_ms: usize,
    pub playing_all: bool,
}

#[derive(Default)]
struct Inner {
    session: Option<(u64, PlaybackSession)>,
    queue: Option<Arc<StopSignal>>,
    next_id: u64,
}

impl Inner {
    fn busy(&self) -> bool {
        self.queue.is_some()
            || self
                .session
                .as_ref()
                .is_some_and(|(_, s)| s.state() != PlaybackState::Stopped)
    }
}

pub struct Player {
    clock: Arc<dyn Clock>,
    timing: TimingConfig,
    devices: DeviceFactory,
    inner: Mutex<Inner>,
}

impl Player {
    pub fn new(clock: Arc<dyn Clock>, timing: TimingConfig, devices: DeviceFactory) -> Player {
        Player {
            clock,
            timing,
            devices,
            inner: Mutex::default(),
        }
    }

    pub fn is_busy(&self) -> bool {
        self.inner.lock().unwrap().busy()
    }

    /// Starts `performance` unless something is already playing.
    pub fn play(&self, performance: Performance) -> Result<u64, PlayerError> {
        let mut inner = self.inner.lock().unwrap();
        if inner.busy() {
            return Err(PlayerError::Busy);
        }
        self.start(&mut inner, performance).map(|(id, _)| id)
    }

    fn start(
        &self,
        inner: &mut Inner,
        p: Performance,
    ) -> Result<(u64, PlaybackSession), PlayerError> {
        let device = (self.devices)()?;
        let session = play_piece(
            p.piece_id,
            &p.mscores,
            &p.params,
            &self.timing,
            device,
            self.clock.clone(),
        )?;
        inner.next_id += 1;
        let id = inner.next_id;
        inner.session = Some((id, session.clone()));
        Ok((id, session))
    }

    /// Plays `queue` in order on a background thread, waiting for each piece
    /// to finish and then [`QUEUE_GAP`] before the next.
    pub fn play_all(self: &Arc<Self>, queue: Vec<Performance>) -> Result<(), PlayerError> {
        let mut inner = self.inner.lock().unwrap();
        if inner.busy() {
            return Err(PlayerError::Busy);
        }
        if queue.is_empty() {
            return Ok(());
        }
        let cancel = Arc::new(StopSignal::new());
        inner.queue = Some(cancel.clone());
        let player = self.clone();
        let spawned = thread::Builder::new()
            .name("play-all".into())
            .spawn(move || player.run_queue(&cancel, queue));
        if let Err(e) = spawned {
            inner.queue = None;
            return Err(PlaybackError::Spawn(e).into());
        }
        Ok(())
    }

    fn run_queue(&self, cancel: &Arc<StopSignal>, queue: Vec<Performance>) {
        for (n, performance) in queue.into_iter().enumerate() {
            if n > 0 && !self.clock.sleep_until(self.clock.now() + QUEUE_GAP, cancel) {
                break;
            }
            let session = {
                let mut inner = self.inner.lock().unwrap();
                if cancel.is_set() {
                    break;
                }
                let piece_id = performance.piece_id.clone();
                match self.start(&mut inner, performance) {
                    Ok((_, session)) => session,
                    Err(e) => {
                        tracing::warn!("play all: skipping `{piece_id}`: {e}");
                        continue;
                    }
                }
            };
            session.wait();
        }
        let mut inner = self.inner.lock().unwrap();
        if inner.queue.as_ref().is_some_and(|c| Arc::ptr_eq(c, cancel)) {
            inner.queue = None;
        }
    }

    /// Cancels any queue and stops the current session.
    pub fn stop(&self) -> PlaybackState {
        let session = {
            let mut inner = self.inner.lock().unwrap();
            if let Some(cancel) = inner.queue.take() {
                cancel.set();
            }
            inner.session.as_ref().map(|(_, s)| s.clone())
        };
        session.map_or(PlaybackState::Stopped, |s| s.stop())
    }

    pub fn status(&self) -> PlayerStatus {
        let inner = self.inner.lock().unwrap();
        let playing_all = inner.queue.is_some();
        match &inner.session {
            Some((id, session)) => {
                let s = session.status();
                PlayerStatus {
                    state: s.state,
                    piece_id: Some(session.piece_id().to_string()),
                    session_id: Some(*id),
                    elapsed_s: s.elapsed_s,
                    progress: s.progress,
                    length_ms: s.length_ms,
                    playing_all,
                }
            }
            None => PlayerStatus {
                state: PlaybackState::Stopped,
                piece_id: None,
                session_id: None,
                elapsed_s: 0.0,
                progress: Vec::new(),
                length_ms: 0,
                playing_all,
            },
        }
    }
}
