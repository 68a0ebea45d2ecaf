use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use probmusic::generator::{generate_piece, GenParams, MScore};
use probmusic::midi::{apply_fadeout, render_stream, stream_channel, TimingConfig};
use probmusic::playback::{
    play_piece, Clock, ManualClock, PlaybackState, RecordedMessage, RecordingDevice, SystemClock,
};
use probmusic::{parse_spec, RELAXING_SPEC};

fn piece(params: &GenParams) -> Vec<MScore> {
    generate_piece(&parse_spec(RELAXING_SPEC).unwrap(), params).unwrap()
}

fn on_channel(messages: &[RecordedMessage], channel: u8) -> Vec<RecordedMessage> {
    messages
        .iter()
        .filter(|m| m.bytes[0] & 0x0f == channel)
        .cloned()
        .collect()
}

fn first_note_on(messages: &[RecordedMessage], channel: u8) -> Option<Duration> {
    messages
        .iter()
        .find(|m| m.bytes[0] == 0x90 | channel && m.bytes[2] > 0)
        .map(|m| m.at)
}

#[test]
fn streams_start_exactly_one_stagger_apart() {
    let clock = Arc::new(ManualClock::new());
    let device = RecordingDevice::new(clock.clone());
    let params = GenParams {
        length_ms: 12,
        master_seed: 3,
        ..GenParams::default()
    };
    let timing = TimingConfig::default();
    let session = play_piece(
        "relaxing",
        &piece(&params),
        &params,
        &timing,
        Box::new(device.clone()),
        clock.clone(),
    )
    .unwrap();
    clock.run_until_idle();
    assert_eq!(
        session.wait_timeout(Duration::from_secs(5)),
        PlaybackState::Stopped
    );
    let messages = device.messages();
    for i in 0..3 {
        assert_eq!(
            first_note_on(&messages, i as u8),
            Some(Duration::from_secs(3 * i))
        );
    }
    assert!(device.sounding().is_empty());
    assert_eq!(session.status().progress, [12, 12, 12]);
    assert_eq!(clock.attached(), 0);
}

#[test]
fn each_stream_follows_its_own_schedule() {
    let clock = Arc::new(ManualClock::new());
    let device = RecordingDevice::new(clock.clone());
    let params = GenParams {
        length_ms: 30,
        streams_k: 4,
        stagger_s: 1.25,
        master_seed: 17,
        ..GenParams::default()
    };
    let timing = TimingConfig {
        bpm: 90,
        ..TimingConfig::default()
    };
    let mscores = piece(&params);
    let session = play_piece(
        "p",
        &mscores,
        &params,
        &timing,
        Box::new(device.clone()),
        clock.clone(),
    )
    .unwrap();
    clock.run_until_idle();
    session.wait();
    let messages = device.messages();
    for (i, m) in mscores.iter().enumerate() {
        let channel = stream_channel(i);
        let rendered = render_stream(m, channel, &timing).unwrap();
        let offset = Duration::from_secs_f64(i as f64 * params.stagger_s);
        let expected: Vec<RecordedMessage> =
            apply_fadeout(&rendered.events, channel, &timing, timing.fade_s)
                .iter()
                .map(|e| RecordedMessage {
                    at: offset + timing.ticks_to_duration(e.tick),
                    bytes: e.message(),
                })
                .collect();
        assert_eq!(on_channel(&messages, channel), expected, "stream {i}");
    }
}

#[test]
fn stop_silences_every_channel_immediately() {
    let clock = Arc::new(ManualClock::new());
    let device = RecordingDevice::new(clock.clone());
    let params = GenParams {
        length_ms: 60,
        streams_k: 5,
        master_seed: 8,
        ..GenParams::default()
    };
    let session = play_piece(
        "p",
        &piece(&params),
        &params,
        &TimingConfig::default(),
        Box::new(device.clone()),
        clock.clone(),
    )
    .unwrap();
    clock.run_until(Duration::from_millis(13_250));
    assert_eq!(session.state(), PlaybackState::Playing);
    assert!(!device.sounding().is_empty());
    let before = device.messages().len();

    let stopped_at = clock.now();
    assert_eq!(session.stop(), PlaybackState::Stopped);
    let after: Vec<RecordedMessage> = device.messages()[before..].to_vec();
    assert!(device.sounding().is_empty());
    for ch in 0..5u8 {
        let cc: Vec<&RecordedMessage> = after.iter().filter(|m| m.bytes[0] == 0xb0 | ch).collect();
        assert_eq!(cc.len(), 2, "channel {ch}");
        assert_eq!(cc[0].bytes, [0xb0 | ch, 123, 0]);
        assert_eq!(cc[1].bytes, [0xb0 | ch, 7, 100]);
        assert!(cc
            .iter()
            .all(|m| m.at - stopped_at < Duration::from_millis(100)));
    }
    assert_eq!(after.len(), 10);

    clock.run_until_idle();
    assert_eq!(
        device.messages().len(),
        before + 10,
        "nothing plays after stop"
    );
    assert_eq!(session.stop(), PlaybackState::Stopped);
    assert_eq!(
        device.messages().len(),
        before + 10,
        "second stop is a no-op"
    );
    assert_eq!(clock.attached(), 0);
}

#[test]
fn stop_before_late_streams_start() {
    let clock = Arc::new(ManualClock::new());
    let device = RecordingDevice::new(clock.clone());
    let params = GenParams {
        length_ms: 5,
        master_seed: 2,
        ..GenParams::default()
    };
    let session = play_piece(
        "p",
        &piece(&params),
        &params,
        &TimingConfig::default(),
        Box::new(device.clone()),
        clock.clone(),
    )
    .unwrap();
    clock.run_until(Duration::from_secs(1));
    session.stop();
    assert_eq!(first_note_on(&device.messages(), 0), Some(Duration::ZERO));
    assert_eq!(first_note_on(&device.messages(), 1), None);
    assert_eq!(session.status().progress[1..], [0, 0]);
}

#[test]
fn status_reports_progress_and_elapsed_time() {
    let clock = Arc::new(ManualClock::new());
    let device = RecordingDevice::new(clock.clone());
    let params = GenParams {
        length_ms: 40,
        master_seed: 5,
        ..GenParams::default()
    };
    let session = play_piece(
        "p",
        &piece(&params),
        &params,
        &TimingConfig::default(),
        Box::new(device),
        clock.clone(),
    )
    .unwrap();
    clock.run_until(Duration::from_secs(4));
    let status = session.status();
    assert_eq!(status.state, PlaybackState::Playing);
    assert_eq!(status.elapsed_s, 4.0);
    assert_eq!(status.length_ms, 40);
    assert!(status.progress[0] >= 1 && status.progress[1] >= 1 && status.progress[2] == 0);
    session.stop();
    clock.advance_by(Duration::from_secs(10));
    assert_eq!(session.status().elapsed_s, 4.0);
}

#[test]
fn stop_from_another_thread_under_real_time() {
    let clock = Arc::new(SystemClock::new());
    let device = RecordingDevice::new(clock.clone());
    let params = GenParams {
        length_ms: 200,
        streams_k: 4,
        stagger_s: 0.05,
        ..GenParams::default()
    };
    let session = play_piece(
        "p",
        &piece(&params),
        &params,
        &TimingConfig::default(),
        Box::new(device.clone()),
        clock.clone(),
    )
    .unwrap();
    thread::sleep(Duration::from_millis(300));
    let remote = session.clone();
    let requested = clock.now();
    let wall = Instant::now();
    thread::spawn(move || remote.stop()).join().unwrap();
    assert!(
        wall.elapsed() < Duration::from_millis(100),
        "stop took {:?}",
        wall.elapsed()
    );
    assert_eq!(session.state(), PlaybackState::Stopped);
    assert!(device.sounding().is_empty());
    let last = device.messages().last().unwrap().at;
    assert!(last - requested < Duration::from_millis(100));
}

#[test]
fn messages_reach_the_device_whole() {
    let clock = Arc::new(SystemClock::new());
    let device = RecordingDevice::new(clock.clone());
    let params = GenParams {
        length_ms: 12,
        streams_k: 15,
        stagger_s: 0.0,
        ..GenParams::default()
    };
    let spec = parse_spec(r#"{{"fast"},{"A","C E G"},{"i"},{"Oboe","Choir"}}"#).unwrap();
    let mscores = generate_piece(&spec, &params).unwrap();
    let timing = TimingConfig {
        bpm: 300,
        fade_s: 1.0,
        ..TimingConfig::default()
    };
    let session = play_piece(
        "p",
        &mscores,
        &params,
        &timing,
        Box::new(device.clone()),
        clock,
    )
    .unwrap();
    assert_eq!(
        session.wait_timeout(Duration::from_secs(30)),
        PlaybackState::Stopped
    );

    let wire = device.wire_bytes();
    let mut pos = 0;
    let mut count = 0;
    while pos < wire.len() {
        let status = wire[pos];
        assert!(
            status & 0x80 != 0,
            "data byte where a status byte belongs at {pos}"
        );
        let len = if status & 0xf0 == 0xc0 { 2 } else { 3 };
        assert!(wire[pos + 1..pos + len].iter().all(|b| *b < 0x80));
        pos += len;
        count += 1;
    }
    assert_eq!(pos, wire.len());
    assert_eq!(count, device.messages().len());
    assert!(device.sounding().is_empty());
    assert_eq!(session.status().progress, vec![12; 15]);
}

#[test]
fn rejects_bad_requests() {
    let clock: Arc<dyn Clock> = Arc::new(ManualClock::new());
    let params = GenParams::default();
    let device = || Box::new(RecordingDevice::new(clock.clone()));
    assert!(play_piece(
        "p",
        &[],
        &params,
        &TimingConfig::default(),
        device(),
        clock.clone()
    )
    .is_err());
    let bad = TimingConfig {
        bpm: 0,
        ..TimingConfig::default()
    };
    assert!(play_piece("p", &piece(&params), &params, &bad, device(), clock.clone()).is_err());
    let spec = parse_spec(r#"{{"t"},{"A"},{"q"},{"Kazoo"}}"#).unwrap();
    let m = generate_piece(&spec, &params).unwrap();
    assert!(play_piece(
        "p",
        &m,
        &params,
        &TimingConfig::default(),
        device(),
        clock.clone()
    )
    .is_err());
}
