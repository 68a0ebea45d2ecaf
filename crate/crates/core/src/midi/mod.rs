//! Rendering scores to tick-stamped MIDI events and type-1 Standard MIDI Files.

mod smf;

pub use smf::{write_vlq, SmfDocument, SmfError};

use std::time::Duration as StdDuration;

use thiserror::Error;

use crate::generator::{GenParams, MScore, ScoreEvent, MAX_STREAMS};
use crate::gm;
use crate::spec::{CompositionSpec, InstrumentName, NoteLength, NoteLetter, OctaveDuration};

/// Octave used when a token carries only a duration letter; puts bare `C` on 60.
pub const DEFAULT_OCTAVE: u8 = 5;
pub const PERCUSSION_CHANNEL: u8 = 9;
pub const CC_VOLUME: u8 = 7;
pub const CC_ALL_NOTES_OFF: u8 = 123;
pub const FADE_STEPS: u64 = 20;
pub const FADE_START_VOLUME: u8 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct TimingConfig {
    pub ppq: u16,
    pub bpm: u32,
    pub velocity: u8,
    /// Length of the closing volume ramp, in seconds.
    pub fade_s: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            ppq: 480,
            bpm: 120,
            velocity: 64,
            fade_s: 5.0,
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.ppq == 0 || self.ppq > 0x7fff {
            return Err(RenderError::InvalidTiming("ppq must be within 1..=32767"));
        }
        if !(20..=300).contains(&self.bpm) {
            return Err(RenderError::InvalidTiming("bpm must be within 20..=300"));
        }
        if self.velocity > 127 {
            return Err(RenderError::InvalidTiming(
                "velocity must be within 0..=127",
            ));
        }
        if !self.fade_s.is_finite() || self.fade_s < 0.0 {
            return Err(RenderError::InvalidTiming(
                "fade window must be non-negative",
            ));
        }
        Ok(())
    }

    pub fn seconds_to_ticks(&self, seconds: f64) -> u64 {
        (seconds * self.bpm as f64 / 60.0 * self.ppq as f64).round() as u64
    }

    pub fn ticks_to_duration(&self, ticks: u64) -> StdDuration {
        let nanos = ticks as u128 * 60_000_000_000 / (self.bpm as u128 * self.ppq as u128);
        StdDuration::from_nanos(nanos as u64)
    }

    pub fn ticks_to_seconds(&self, ticks: u64) -> f64 {
        ticks as f64 * 60.0 / (self.bpm as f64 * self.ppq as f64)
    }

    pub fn micros_per_quarter(&self) -> u32 {
        (60_000_000 + self.bpm / 2) / self.bpm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MidiKind {
    ProgramChange { program: u8 },
    NoteOn { note: u8, velocity: u8 },
    NoteOff { note: u8 },
    ControlChange { controller: u8, value: u8 },
}

impl MidiKind {
    /// Order among events sharing a tick: releases first, then controls,
    /// program changes, and new notes last.
    fn rank(&self) -> u8 {
        match self {
            MidiKind::NoteOff { .. } => 0,
            MidiKind::ControlChange { .. } => 1,
            MidiKind::ProgramChange { .. } => 2,
            MidiKind::NoteOn { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MidiEvent {
    pub tick: u64,
    pub channel: u8,
    pub kind: MidiKind,
}

impl MidiEvent {
    /// Wire bytes of the channel message.
    pub fn message(&self) -> Vec<u8> {
        let ch = self.channel & 0x0f;
        match self.kind {
            MidiKind::ProgramChange { program } => vec![0xc0 | ch, program & 0x7f],
            MidiKind::NoteOn { note, velocity } => vec![0x90 | ch, note & 0x7f, velocity & 0x7f],
            MidiKind::NoteOff { note } => vec![0x80 | ch, note & 0x7f, 0],
            MidiKind::ControlChange { controller, value } => {
                vec![0xb0 | ch, controller & 0x7f, value & 0x7f]
            }
        }
    }
}

pub fn sort_events(events: &mut [MidiEvent]) {
    events.sort_by_key(|e| (e.tick, e.kind.rank()));
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("note {letter}{octave} is MIDI note {number}, above 127")]
    OutOfMidiRange {
        letter: NoteLetter,
        octave: u8,
        number: u16,
    },
    #[error("unknown instrument `{0}`")]
    UnknownInstrument(String),
    #[error("{k} streams requested, at most 15 are supported")]
    TooManyStreams { k: usize },
    #[error("a piece needs at least one stream")]
    NoStreams,
    #[error("invalid timing: {0}")]
    InvalidTiming(&'static str),
    #[error(transparent)]
    Smf(#[from] SmfError),
}

pub(crate) fn raw_note_number(letter: NoteLetter, octave: u8) -> u16 {
    12 * octave as u16 + letter.semitone() as u16
}

/// `12 * octave + semitone(letter)`, octave 5 when absent.
pub fn note_number(letter: NoteLetter, octave: Option<u8>) -> Result<u8, RenderError> {
    let octave = octave.unwrap_or(DEFAULT_OCTAVE);
    let number = raw_note_number(letter, octave);
    u8::try_from(number)
        .ok()
        .filter(|n| *n <= 127)
        .ok_or(RenderError::OutOfMidiRange {
            letter,
            octave,
            number,
        })
}

pub fn duration_ticks(length: NoteLength, timing: &TimingConfig) -> u64 {
    length.eighths() * timing.ppq as u64 / 2
}

pub fn program_number(name: &InstrumentName) -> Result<u8, RenderError> {
    gm::program_for(name.as_str()).ok_or_else(|| RenderError::UnknownInstrument(name.to_string()))
}

/// Channel for the stream at `position`, skipping the percussion channel.
pub fn stream_channel(position: usize) -> u8 {
    if position < PERCUSSION_CHANNEL as usize {
        position as u8
    } else {
        position as u8 + 1
    }
}

/// A rendered stream plus the tick at which each word begins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedStream {
    pub events: Vec<MidiEvent>,
    pub word_starts: Vec<u64>,
    pub end_tick: u64,
}

pub fn render_stream(
    m: &MScore,
    channel: u8,
    timing: &TimingConfig,
) -> Result<RenderedStream, RenderError> {
    let mut events = Vec::new();
    let mut word_starts = Vec::new();
    let mut cursor = 0u64;
    for event in &m.events {
        match event {
            ScoreEvent::Tempo(_) => {}
            ScoreEvent::InstrumentChange(name) => events.push(MidiEvent {
                tick: cursor,
                channel,
                kind: MidiKind::ProgramChange {
                    program: program_number(name)?,
                },
            }),
            ScoreEvent::Word(word) => {
                word_starts.push(cursor);
                let length = duration_ticks(word.od.length(), timing);
                for &letter in word.notes.notes() {
                    let note = note_number(letter, word.od.octave())?;
                    events.push(MidiEvent {
                        tick: cursor,
                        channel,
                        kind: MidiKind::NoteOn {
                            note,
                            velocity: timing.velocity,
                        },
                    });
                    events.push(MidiEvent {
                        tick: cursor + length,
                        channel,
                        kind: MidiKind::NoteOff { note },
                    });
                    cursor += length;
                }
            }
        }
    }
    sort_events(&mut events);
    Ok(RenderedStream {
        events,
        word_starts,
        end_tick: cursor,
    })
}

/// Renders one score from tick 0 on `channel`.
pub fn render_mscore(
    m: &MScore,
    channel: u8,
    timing: &TimingConfig,
) -> Result<Vec<MidiEvent>, RenderError> {
    render_stream(m, channel, timing).map(|r| r.events)
}

/// Adds a channel-volume baseline at tick 0 and a 20-step linear ramp from
/// 100 down to 0 over the last `window_s` seconds of the track.
pub fn apply_fadeout(
    track: &[MidiEvent],
    channel: u8,
    timing: &TimingConfig,
    window_s: f64,
) -> Vec<MidiEvent> {
    let volume = |tick, value| MidiEvent {
        tick,
        channel,
        kind: MidiKind::ControlChange {
            controller: CC_VOLUME,
            value,
        },
    };
    let mut out = Vec::with_capacity(track.len() + 1 + FADE_STEPS as usize);
    out.push(volume(0, FADE_START_VOLUME));
    out.extend_from_slice(track);
    if let Some(end) = track.iter().map(|e| e.tick).max() {
        let start = end.saturating_sub(timing.seconds_to_ticks(window_s));
        let span = end - start;
        let last = FADE_STEPS - 1;
        for step in 0..FADE_STEPS {
            let tick = start + (2 * span * step + last) / (2 * last);
            let value = (2 * FADE_START_VOLUME as u64 * (last - step) + last) / (2 * last);
            out.push(volume(tick, value as u8));
        }
    }
    sort_events(&mut out);
    out
}

/// Renders all streams into a type-1 file: stream `i` on its own channel,
/// faded, then shifted by `i * stagger_s`.
pub fn assemble_smf(
    mscores: &[MScore],
    params: &GenParams,
    timing: &TimingConfig,
) -> Result<SmfDocument, RenderError> {
    timing.validate()?;
    if mscores.is_empty() {
        return Err(RenderError::NoStreams);
    }
    if mscores.len() > MAX_STREAMS {
        return Err(RenderError::TooManyStreams { k: mscores.len() });
    }
    let mut tracks = Vec::with_capacity(mscores.len());
    for (i, m) in mscores.iter().enumerate() {
        let channel = stream_channel(i);
        let rendered = render_mscore(m, channel, timing)?;
        let mut track = apply_fadeout(&rendered, channel, timing, timing.fade_s);
        let offset = stream_offset_ticks(i, params, timing);
        for e in &mut track {
            e.tick += offset;
        }
        tracks.push(track);
    }
    Ok(SmfDocument {
        ppq: timing.ppq,
        micros_per_quarter: timing.micros_per_quarter(),
        tracks,
    })
}

pub fn stream_offset_ticks(position: usize, params: &GenParams, timing: &TimingConfig) -> u64 {
    timing.seconds_to_ticks(position as f64 * params.stagger_s)
}

/// Expected length of a piece in seconds: the stagger of the last stream
/// plus `length_ms` times the mean word length under bag proportions.
pub fn expected_piece_seconds(
    spec: &CompositionSpec,
    params: &GenParams,
    timing: &TimingConfig,
) -> f64 {
    let mean_notes =
        spec.notes.iter().map(|e| e.len() as f64).sum::<f64>() / spec.notes.len() as f64;
    let mean_seconds = spec
        .octave_durations
        .iter()
        .map(|od: &OctaveDuration| timing.ticks_to_seconds(duration_ticks(od.length(), timing)))
        .sum::<f64>()
        / spec.octave_durations.len() as f64;
    (params.streams_k.saturating_sub(1)) as f64 * params.stagger_s
        + params.length_ms as f64 * mean_notes * mean_seconds
}
