//! Score generation by weighted bag sampling.
//!
//! Every word is an independent pick from the note bag and the
//! octave/duration bag. After each word but the last, the instrument changes
//! with probability `change_prob_p`; a change re-picks from the whole
//! instrument bag and may land on the current instrument.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::spec::{CompositionSpec, InstrumentName, NoteElement, OctaveDuration};

/// Highest stream count: one melodic channel per stream, percussion excluded.
pub const MAX_STREAMS: usize = 15;

pub const DEFAULT_TEMPO: &str = "Allegro";

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Words per score.
    pub length_ms: usize,
    pub streams_k: usize,
    pub change_prob_p: f64,
    /// Delay between consecutive stream starts, in seconds.
    pub stagger_s: f64,
    pub master_seed: u64,
    pub tempo: String,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            length_ms: 120,
            streams_k: 3,
            change_prob_p: 0.4,
            stagger_s: 3.0,
            master_seed: 0,
            tempo: DEFAULT_TEMPO.to_string(),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.length_ms == 0 {
            return Err(GenError::InvalidParams("length must be at least 1 word"));
        }
        if !(1..=MAX_STREAMS).contains(&self.streams_k) {
            return Err(GenError::InvalidParams(
                "stream count must be within 1..=15",
            ));
        }
        if !(0.0..=1.0).contains(&self.change_prob_p) {
            return Err(GenError::InvalidParams(
                "change probability must be within [0, 1]",
            ));
        }
        if !self.stagger_s.is_finite() || self.stagger_s < 0.0 {
            return Err(GenError::InvalidParams(
                "stagger must be a non-negative number of seconds",
            ));
        }
        if self.tempo.is_empty() || !self.tempo.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(GenError::InvalidParams("tempo name must be letters only"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("cannot pick from an empty bag")]
    EmptyBag,
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    pub notes: NoteElement,
    pub od: OctaveDuration,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ScoreEvent {
    Tempo(String),
    InstrumentChange(InstrumentName),
    Word(Word),
}

/// One generated stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MScore {
    pub stream_index: usize,
    pub events: Vec<ScoreEvent>,
}

impl MScore {
    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.events.iter().filter_map(|e| match e {
            ScoreEvent::Word(w) => Some(w),
            _ => None,
        })
    }

    pub fn word_count(&self) -> usize {
        self.words().count()
    }

    pub fn instrument_changes(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, ScoreEvent::InstrumentChange(_)))
            .count()
    }
}

/// Uniform pick over bag positions using exactly one 64-bit draw.
///
/// The index is the high word of `draw * len`, so the bias is below
/// `len / 2^64`.
pub fn pick_from_bag<'a, T, R: RngCore + ?Sized>(
    bag: &'a [T],
    rng: &mut R,
) -> Result<&'a T, GenError> {
    if bag.is_empty() {
        return Err(GenError::EmptyBag);
    }
    let index = ((rng.next_u64() as u128 * bag.len() as u128) >> 64) as usize;
    Ok(&bag[index])
}

/// Bernoulli trial from one 64-bit draw. `p = 0` never fires, `p = 1` always does.
pub fn bernoulli<R: RngCore + ?Sized>(p: f64, rng: &mut R) -> bool {
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    unit < p
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `index` of a piece.
pub fn stream_seed(master_seed: u64, index: usize) -> u64 {
    mix64(mix64(master_seed) ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn stream_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master_seed, index))
}

pub fn generate_mscore<R: RngCore + ?Sized>(
    spec: &CompositionSpec,
    params: &GenParams,
    stream_index: usize,
    rng: &mut R,
) -> Result<MScore, GenError> {
    let mut events = Vec::with_capacity(2 + params.length_ms * 2);
    events.push(ScoreEvent::Tempo(params.tempo.clone()));
    events.push(ScoreEvent::InstrumentChange(
        pick_from_bag(&spec.instruments, rng)?.clone(),
    ));
    for i in 0..params.length_ms {
        let notes = pick_from_bag(&spec.notes, rng)?.clone();
        let od = *pick_from_bag(&spec.octave_durations, rng)?;
        events.push(ScoreEvent::Word(Word { notes, od }));
        if i + 1 < params.length_ms && bernoulli(params.change_prob_p, rng) {
            events.push(ScoreEvent::InstrumentChange(
                pick_from_bag(&spec.instruments, rng)?.clone(),
            ));
        }
    }
    Ok(MScore {
        stream_index,
        events,
    })
}

/// Generates `streams_k` scores, stream `i` from its own seeded substream.
pub fn generate_piece(spec: &CompositionSpec, params: &GenParams) -> Result<Vec<MScore>, GenError> {
    params.validate()?;
    (0..params.streams_k)
        .map(|i| generate_mscore(spec, params, i, &mut stream_rng(params.master_seed, i)))
        .collect()
}
