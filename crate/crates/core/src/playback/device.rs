use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::{Clock, PlaybackError};

/// A sink for raw MIDI channel messages. Each call carries one whole message.
pub trait MidiOutput: Send {
    fn send(&mut self, message: &[u8]) -> io::Result<()>;
}

impl<T: MidiOutput + ?Sized> MidiOutput for Box<T> {
    fn send(&mut self, message: &[u8]) -> io::Result<()> {
        (**self).send(message)
    }
}

#[derive(Debug, Default)]
pub struct NullDevice;

impl MidiOutput for NullDevice {
    fn send(&mut self, _message: &[u8]) -> io::Result<()> {
        Ok(())
    }
}

/// Writes one hex line per message to a writer (stderr for `--device log`).
pub struct LogDevice<W: Write + Send> {
    out: W,
}

impl<W: Write + Send> LogDevice<W> {
    pub fn new(out: W) -> Self {
        LogDevice { out }
    }
}

impl<W: Write + Send> MidiOutput for LogDevice<W> {
    fn send(&mut self, message: &[u8]) -> io::Result<()> {
        let hex: Vec<String> = message.iter().map(|b| format!("{b:02x}")).collect();
        writeln!(self.out, "{}", hex.join(" "))
    }
}

/// A raw MIDI character device such as `/dev/snd/midiC0D0` or `/dev/midi1`.
#[derive(Debug)]
pub struct RawPortDevice {
    path: PathBuf,
    file: File,
}

impl RawPortDevice {
    pub fn open(path: impl AsRef<Path>) -> io::Result<RawPortDevice> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().write(true).open(&path)?;
        Ok(RawPortDevice { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl MidiOutput for RawPortDevice {
    fn send(&mut self, message: &[u8]) -> io::Result<()> {
        self.file.write_all(message)?;
        self.file.flush()
    }
}

/// Raw MIDI ports visible on this host, sorted by path.
pub fn list_ports() -> Vec<PathBuf> {
    let mut ports = Vec::new();
    for dir in ["/dev/snd", "/dev"] {
        let Ok(entries) = std::fs::read_dir(dir) else {
            continue;
        };
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            let is_port = if dir == "/dev/snd" {
                name.starts_with("midiC")
            } else {
                name.starts_with("midi") || name.starts_with("amidi")
            };
            if is_port {
                ports.push(entry.path());
            }
        }
    }
    ports.sort();
    ports
}

/// Opens an output by selector: `null`, `log`, a port index, a path, or a
/// substring of a port's file name. `None` picks the first port.
pub fn open_device(selector: Option<&str>) -> Result<Box<dyn MidiOutput>, PlaybackError> {
    let unavailable = |why: String| PlaybackError::DeviceUnavailable(why);
    match selector {
        Some("null") => return Ok(Box::new(NullDevice)),
        Some("log") => return Ok(Box::new(LogDevice::new(io::stderr()))),
        _ => {}
    }
    let ports = list_ports();
    let path = match selector {
        None => ports
            .first()
            .cloned()
            .ok_or_else(|| unavailable("no MIDI output ports found".into()))?,
        Some(sel) => {
            if let Ok(index) = sel.parse::<usize>() {
                ports
                    .get(index)
                    .cloned()
                    .ok_or_else(|| unavailable(format!("no MIDI port with index {index}")))?
            } else if Path::new(sel).exists() {
                PathBuf::from(sel)
            } else {
                ports
                    .iter()
                    .find(|p| p.to_string_lossy().contains(sel))
                    .cloned()
                    .ok_or_else(|| unavailable(format!("no MIDI port matching `{sel}`")))?
            }
        }
    };
    RawPortDevice::open(&path)
        .map(|d| Box::new(d) as Box<dyn MidiOutput>)
        .map_err(|e| unavailable(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedMessage {
    pub at: Duration,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Default)]
struct Recording {
    messages: Vec<RecordedMessage>,
    wire: Vec<u8>,
    sounding: BTreeSet<(u8, u8)>,
}

/// Test device that timestamps every message with a clock and keeps track of
/// which notes are sounding. Clones share the same recording.
#[derive(Clone)]
pub struct RecordingDevice {
    clock: Arc<dyn Clock>,
    log: Arc<Mutex<Recording>>,
}

impl RecordingDevice {
    pub fn new(clock: Arc<dyn Clock>) -> RecordingDevice {
        RecordingDevice {
            clock,
            log: Arc::default(),
        }
    }

    pub fn messages(&self) -> Vec<RecordedMessage> {
        self.log.lock().unwrap().messages.clone()
    }

    /// Everything sent, concatenated in arrival order.
    pub fn wire_bytes(&self) -> Vec<u8> {
        self.log.lock().unwrap().wire.clone()
    }

    /// `(channel, note)` pairs currently held down.
    pub fn sounding(&self) -> BTreeSet<(u8, u8)> {
        self.log.lock().unwrap().sounding.clone()
    }
}

impl MidiOutput for RecordingDevice {
    fn send(&mut self, message: &[u8]) -> io::Result<()> {
        let at = self.clock.now();
        let mut log = self.log.lock().unwrap();
        log.wire.extend_from_slice(message);
        if let [status, data @ ..] = message {
            let channel = status & 0x0f;
            match (status & 0xf0, data) {
                (0x90, [note, velocity]) if *velocity > 0 => {
                    log.sounding.insert((channel, *note));
                }
                (0x80, [note, _]) | (0x90, [note, _]) => {
                    log.sounding.remove(&(channel, *note));
                }
                (0xb0, [123, _]) => log.sounding.retain(|(c, _)| *c != channel),
                _ => {}
            }
        }
        log.messages.push(RecordedMessage {
            at,
            bytes: message.to_vec(),
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::playback::SystemClock;

    #[test]
    fn recording_tracks_sounding_notes() {
        let mut dev = RecordingDevice::new(Arc::new(SystemClock::new()));
        dev.send(&[0x90, 60, 64]).unwrap();
        dev.send(&[0x91, 62, 64]).unwrap();
        assert_eq!(dev.sounding().len(), 2);
        dev.send(&[0x80, 60, 0]).unwrap();
        assert_eq!(dev.sounding(), BTreeSet::from([(1, 62)]));
        dev.send(&[0xb1, 123, 0]).unwrap();
        assert!(dev.sounding().is_empty());
        assert_eq!(dev.messages().len(), 4);
        assert_eq!(dev.wire_bytes().len(), 12);
    }

    #[test]
    fn log_device_writes_hex() {
        let mut buf = Vec::new();
        LogDevice::new(&mut buf).send(&[0xc0, 68]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "c0 44\n");
    }

    #[test]
    fn named_pseudo_devices() {
        assert!(open_device(Some("null")).is_ok());
        assert!(matches!(
            open_device(Some("no-such-port-anywhere")),
            Err(PlaybackError::DeviceUnavailable(_))
        ));
    }
}
