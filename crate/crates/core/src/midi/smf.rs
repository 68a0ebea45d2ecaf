use thiserror::Error;

use super::MidiEvent;

/// Largest value a four-byte variable-length quantity can hold.
pub const MAX_VLQ: u32 = 0x0fff_ffff;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmfError {
    #[error("delta time {0} does not fit a variable-length quantity")]
    DeltaTooLarge(u64),
    #[error("track {track} is not sorted by tick")]
    Unsorted { track: usize },
}

/// In-memory type-1 Standard MIDI File: one track per stream, tempo in track 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmfDocument {
    pub ppq: u16,
    pub micros_per_quarter: u32,
    pub tracks: Vec<Vec<MidiEvent>>,
}

pub fn write_vlq(out: &mut Vec<u8>, value: u32) {
    debug_assert!(value <= MAX_VLQ);
    let mut started = false;
    for shift in [21u32, 14, 7] {
        let group = ((value >> shift) & 0x7f) as u8;
        if started || group != 0 {
            out.push(group | 0x80);
            started = true;
        }
    }
    out.push((value & 0x7f) as u8);
}

impl SmfDocument {
    pub const FORMAT: u16 = 1;

    pub fn format(&self) -> u16 {
        Self::FORMAT
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, SmfError> {
        let mut out = Vec::new();
        out.extend_from_slice(b"MThd");
        out.extend_from_slice(&6u32.to_be_bytes());
        out.extend_from_slice(&Self::FORMAT.to_be_bytes());
        out.extend_from_slice(&(self.tracks.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.ppq.to_be_bytes());
        for (i, track) in self.tracks.iter().enumerate() {
            let body = self.track_body(i, track)?;
            out.extend_from_slice(b"MTrk");
            out.extend_from_slice(&(body.len() as u32).to_be_bytes());
            out.extend_from_slice(&body);
        }
        Ok(out)
    }

    fn track_body(&self, index: usize, track: &[MidiEvent]) -> Result<Vec<u8>, SmfError> {
        let mut body = Vec::with_capacity(track.len() * 4 + 16);
        if index == 0 {
            let tempo = self.micros_per_quarter.to_be_bytes();
            body.extend_from_slice(&[0x00, 0xff, 0x51, 0x03, tempo[1], tempo[2], tempo[3]]);
        }
        let mut last = 0u64;
        for event in track {
            if event.tick < last {
                return Err(SmfError::Unsorted { track: index });
            }
            let delta = event.tick - last;
            if delta > MAX_VLQ as u64 {
                return Err(SmfError::DeltaTooLarge(delta));
            }
            write_vlq(&mut body, delta as u32);
            body.extend_from_slice(&event.message());
            last = event.tick;
        }
        body.extend_from_slice(&[0x00, 0xff, 0x2f, 0x00]);
        Ok(body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::MidiKind;

    fn vlq(v: u32) -> Vec<u8> {
        let mut out = Vec::new();
        write_vlq(&mut out, v);
        out
    }

    #[test]
    fn vlq_reference_values() {
        // Examples from the Standard MIDI File specification.
        assert_eq!(vlq(0), [0x00]);
        assert_eq!(vlq(0x40), [0x40]);
        assert_eq!(vlq(0x7f), [0x7f]);
        assert_eq!(vlq(0x80), [0x81, 0x00]);
        assert_eq!(vlq(0x2000), [0xc0, 0x00]);
        assert_eq!(vlq(0x3fff), [0xff, 0x7f]);
        assert_eq!(vlq(0x4000), [0x81, 0x80, 0x00]);
        assert_eq!(vlq(0x10_0000), [0xc0, 0x80, 0x00]);
        assert_eq!(vlq(0x1f_ffff), [0xff, 0xff, 0x7f]);
        assert_eq!(vlq(0x20_0000), [0x81, 0x80, 0x80, 0x00]);
        assert_eq!(vlq(MAX_VLQ), [0xff, 0xff, 0xff, 0x7f]);
    }

    #[test]
    fn minimal_file_layout() {
        let doc = SmfDocument {
            ppq: 480,
            micros_per_quarter: 500_000,
            tracks: vec![vec![MidiEvent {
                tick: 480,
                channel: 1,
                kind: MidiKind::NoteOn {
                    note: 60,
                    velocity: 64,
                },
            }]],
        };
        let bytes = doc.to_bytes().unwrap();
        let expected: Vec<u8> = [
            &b"MThd"[..],
            &[0, 0, 0, 6, 0, 1, 0, 1, 0x01, 0xe0],
            b"MTrk",
            &[0, 0, 0, 16],
            &[0x00, 0xff, 0x51, 0x03, 0x07, 0xa1, 0x20],
            &[0x83, 0x60, 0x91, 60, 64],
            &[0x00, 0xff, 0x2f, 0x00],
        ]
        .concat();
        assert_eq!(bytes, expected);
    }

    #[test]
    fn unsorted_tracks_are_rejected() {
        let on = |tick| MidiEvent {
            tick,
            channel: 0,
            kind: MidiKind::NoteOff { note: 1 },
        };
        let doc = SmfDocument {
            ppq: 96,
            micros_per_quarter: 500_000,
            tracks: vec![vec![on(10), on(5)]],
        };
        assert_eq!(doc.to_bytes(), Err(SmfError::Unsorted { track: 0 }));
    }
}
