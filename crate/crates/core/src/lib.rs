//! Randomized multi-stream MIDI music.
//!
//! A piece is described by a small four-row specification: a title, a bag of
//! notes, a bag of octave/duration tokens and a bag of instruments. Bags are
//! ordered multisets, so duplicating an entry raises its selection
//! probability. From a specification the [`generator`] draws `K` independent
//! scores, [`notation`] prints them as console token streams, [`midi`] turns
//! them into Standard MIDI Files and [`playback`] plays them live as `K`
//! staggered, unsynchronized streams.
//!
//! ```
//! use probmusic::{generator, parse_spec, GenParams};
//!
//! let spec = parse_spec(r#"{{"demo"},{"A","C","C"},{"4q","h"},{"Oboe"}}"#).unwrap();
//! let params = GenParams { length_ms: 8, streams_k: 2, ..GenParams::default() };
//! let scores = generator::generate_piece(&spec, &params).unwrap();
//! assert_eq!(scores.iter().map(|s| s.word_count()).sum::<usize>(), 16);
//! ```

pub mod combinatorics;
pub mod generator;
pub mod gm;
pub mod midi;
pub mod notation;
pub mod playback;
pub mod playlist;
pub mod spec;

pub use combinatorics::MultiplicityReport;
pub use generator::{GenParams, MScore, ScoreEvent, Word};
pub use midi::{MidiEvent, MidiKind, SmfDocument, TimingConfig};
pub use notation::ScoreText;
pub use playback::{PlaybackSession, PlaybackState};
pub use spec::{
    parse_spec, serialize_spec, CompositionSpec, InstrumentName, NoteElement, NoteLength,
    NoteLetter, OctaveDuration,
};

/// Source text of the bundled "Relaxing" example piece.
pub const RELAXING_SPEC: &str = r#"{
  {"Relaxing, Oct 24, 2013"},
  {"A","C","E","G"},
  {"3q","2h","5w","h","4h"},
  {"Oboe","ELECTRIC_JAZZ_GUITAR","Atmosphere","Choir","Choir_AAHS"},
}
"#;
