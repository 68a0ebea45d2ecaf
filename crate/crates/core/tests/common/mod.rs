#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use probmusic::gm::PROGRAMS;
use probmusic::spec::{
    CompositionSpec, InstrumentName, NoteElement, NoteLength, NoteLetter, OctaveDuration,
};
use proptest::prelude::*;

/// A channel or meta event read back from a file, with its absolute tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadEvent {
    pub tick: u64,
    pub bytes: Vec<u8>,
}

impl ReadEvent {
    pub fn is_meta(&self) -> bool {
        self.bytes[0] == 0xff
    }

    pub fn channel(&self) -> u8 {
        self.bytes[0] & 0x0f
    }

    pub fn kind(&self) -> u8 {
        self.bytes[0] & 0xf0
    }

    pub fn is_note_on(&self) -> bool {
        self.kind() == 0x90 && self.bytes[2] > 0
    }

    pub fn volume(&self) -> Option<u8> {
        (self.kind() == 0xb0 && self.bytes[1] == 7).then(|| self.bytes[2])
    }
}

#[derive(Debug, Clone)]
pub struct ReadSmf {
    pub format: u16,
    pub division: u16,
    pub tracks: Vec<Vec<ReadEvent>>,
}

impl ReadSmf {
    /// Absolute tick of the first channel event of each track.
    pub fn track_starts(&self) -> Vec<Option<u64>> {
        self.tracks
            .iter()
            .map(|t| t.iter().find(|e| !e.is_meta()).map(|e| e.tick))
            .collect()
    }
}

fn be16(b: &[u8]) -> u16 {
    u16::from_be_bytes([b[0], b[1]])
}

fn be32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

fn read_vlq(data: &[u8], pos: &mut usize) -> Result<u32, String> {
    let mut value = 0u32;
    for i in 0..4 {
        let b = *data.get(*pos).ok_or("truncated delta time")?;
        *pos += 1;
        value = (value << 7) | (b & 0x7f) as u32;
        if b & 0x80 == 0 {
            return Ok(value);
        }
        if i == 3 {
            return Err("delta time longer than four bytes".into());
        }
    }
    unreachable!()
}

fn channel_data_len(status: u8) -> usize {
    match status & 0xf0 {
        0xc0 | 0xd0 => 1,
        _ => 2,
    }
}

/// Independent structural reader for Standard MIDI Files. Checks chunk
/// lengths, delta-time encoding, data-byte ranges, end-of-track placement
/// and that every note-on is matched by a later note-off.
pub fn check_smf(bytes: &[u8]) -> Result<ReadSmf, String> {
    if bytes.len() < 14 || &bytes[..4] != b"MThd" {
        return Err("missing MThd".into());
    }
    if be32(&bytes[4..8]) != 6 {
        return Err("header length is not 6".into());
    }
    let format = be16(&bytes[8..10]);
    let ntracks = be16(&bytes[10..12]) as usize;
    let division = be16(&bytes[12..14]);
    if division == 0 || division & 0x8000 != 0 {
        return Err("division must be positive ticks per quarter".into());
    }
    let mut pos = 14;
    let mut tracks = Vec::new();
    while pos < bytes.len() {
        if bytes.len() < pos + 8 || &bytes[pos..pos + 4] != b"MTrk" {
            return Err(format!("expected MTrk at byte {pos}"));
        }
        let len = be32(&bytes[pos + 4..pos + 8]) as usize;
        let start = pos + 8;
        let end = start + len;
        if end > bytes.len() {
            return Err(format!("track {} overruns the file", tracks.len()));
        }
        tracks.push(
            read_track(&bytes[start..end]).map_err(|e| format!("track {}: {e}", tracks.len()))?,
        );
        pos = end;
    }
    if tracks.len() != ntracks {
        return Err(format!(
            "header says {ntracks} tracks, found {}",
            tracks.len()
        ));
    }
    Ok(ReadSmf {
        format,
        division,
        tracks,
    })
}

fn read_track(data: &[u8]) -> Result<Vec<ReadEvent>, String> {
    let mut pos = 0;
    let mut tick = 0u64;
    let mut running: Option<u8> = None;
    let mut events = Vec::new();
    let mut sounding: BTreeMap<(u8, u8), u32> = BTreeMap::new();
    let mut ended = false;
    while pos < data.len() {
        if ended {
            return Err("events after end of track".into());
        }
        tick += read_vlq(data, &mut pos)? as u64;
        let first = *data.get(pos).ok_or("truncated event")?;
        let event = if first == 0xff {
            let kind = *data.get(pos + 1).ok_or("truncated meta")?;
            pos += 2;
            let len = read_vlq(data, &mut pos)? as usize;
            let body = data.get(pos..pos + len).ok_or("truncated meta body")?;
            pos += len;
            if kind == 0x2f {
                if len != 0 {
                    return Err("end of track with data".into());
                }
                ended = true;
            }
            let mut bytes = vec![0xff, kind];
            bytes.extend_from_slice(body);
            bytes
        } else if first == 0xf0 || first == 0xf7 {
            return Err("unexpected sysex".into());
        } else {
            let status = if first & 0x80 != 0 {
                pos += 1;
                running = Some(first);
                first
            } else {
                running.ok_or("data byte without status")?
            };
            let n = channel_data_len(status);
            let body = data.get(pos..pos + n).ok_or("truncated channel message")?;
            if body.iter().any(|b| *b > 0x7f) {
                return Err(format!("data byte above 127 at {pos}"));
            }
            pos += n;
            let mut bytes = vec![status];
            bytes.extend_from_slice(body);
            bytes
        };
        let e = ReadEvent { tick, bytes: event };
        if !e.is_meta() {
            let key = (e.channel(), e.bytes[1]);
            match e.kind() {
                0x90 if e.bytes[2] > 0 => *sounding.entry(key).or_default() += 1,
                0x80 | 0x90 => {
                    let count = sounding.get_mut(&key).filter(|c| **c > 0).ok_or_else(|| {
                        format!("note-off without note-on for {key:?} at tick {tick}")
                    })?;
                    *count -= 1;
                }
                _ => {}
            }
        }
        events.push(e);
    }
    if !ended {
        return Err("missing end of track".into());
    }
    if let Some((key, _)) = sounding.iter().find(|(_, c)| **c > 0) {
        return Err(format!("note {key:?} never released"));
    }
    Ok(events)
}

pub fn instrument_names() -> Vec<&'static str> {
    PROGRAMS.iter().map(|(_, names)| names[0]).collect()
}

pub fn arb_letter() -> impl Strategy<Value = NoteLetter> {
    prop::sample::select(NoteLetter::ALL.to_vec())
}

pub fn arb_element(max_len: usize) -> impl Strategy<Value = NoteElement> {
    prop::collection::vec(arb_letter(), 1..=max_len).prop_map(|v| NoteElement::new(v).unwrap())
}

/// Octave/durations whose notes all fit in 0..=127.
pub fn arb_od() -> impl Strategy<Value = OctaveDuration> {
    (
        prop::option::of(1u8..=9),
        prop::sample::select(NoteLength::ALL.to_vec()),
    )
        .prop_map(|(o, l)| OctaveDuration::new(o, l).unwrap())
}

pub fn arb_instrument() -> impl Strategy<Value = InstrumentName> {
    prop::sample::select(instrument_names()).prop_map(|n| InstrumentName::new(n).unwrap())
}

/// Renderable specifications. `max_seq` bounds the notes per element.
pub fn arb_spec(max_seq: usize) -> impl Strategy<Value = CompositionSpec> {
    (
        "[A-Za-z0-9 ,.]{0,24}",
        prop::collection::vec(arb_element(max_seq), 1..6),
        prop::collection::vec(arb_od(), 1..6),
        prop::collection::vec(arb_instrument(), 1..5),
        prop::collection::btree_set("[a-z]{1,8}", 0..4),
    )
        .prop_map(
            |(title, notes, octave_durations, instruments, keywords)| CompositionSpec {
                title,
                notes,
                octave_durations,
                instruments,
                keywords: keywords.into_iter().collect::<BTreeSet<_>>(),
            },
        )
}
