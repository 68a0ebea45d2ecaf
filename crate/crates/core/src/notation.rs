//! Console token notation for scores.
//!
//! ```text
//! Thread No0 has started on 2013/10/28 00:43:12
//! T[Allegro] I[Choir] A3q A2h I[Oboe] Eh A5w
//! ```
//!
//! `T[..]` is the tempo, `I[..]` an instrument change and every other token
//! one note: pitch letter, optional octave, duration letter. A word built
//! from a note sequence prints one token per note, all sharing the word's
//! octave and duration.

use std::fmt;

use chrono::NaiveDateTime;
use thiserror::Error;

use crate::generator::{MScore, ScoreEvent, Word};
use crate::spec::{CompositionSpec, InstrumentName, NoteElement, NoteLetter, OctaveDuration};

pub const TIMESTAMP_FORMAT: &str = "%Y/%m/%d %H:%M:%S";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreText {
    pub header: String,
    pub body: String,
}

impl fmt::Display for ScoreText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.header)?;
        writeln!(f, "{}", self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotationError {
    #[error("bad token `{0}`")]
    BadToken(String),
    #[error("bad header `{0}`")]
    BadHeader(String),
    #[error("notes `{0}` do not match any element of the note bag")]
    NotInBag(String),
    #[error("notes `{0}` split into note-bag elements in more than one way")]
    AmbiguousSequence(String),
}

pub fn header(stream_index: usize, start_time: NaiveDateTime) -> String {
    format!(
        "Thread No{stream_index} has started on {}",
        start_time.format(TIMESTAMP_FORMAT)
    )
}

fn push_token(body: &mut String, token: fmt::Arguments<'_>) {
    if !body.is_empty() {
        body.push(' ');
    }
    fmt::write(body, token).expect("writing to a String");
}

/// Formats the token body of a score on one line.
pub fn format_body(m: &MScore) -> String {
    let mut body = String::new();
    for event in &m.events {
        match event {
            ScoreEvent::Tempo(name) => push_token(&mut body, format_args!("T[{name}]")),
            ScoreEvent::InstrumentChange(name) => push_token(&mut body, format_args!("I[{name}]")),
            ScoreEvent::Word(word) => {
                for note in word.notes.notes() {
                    push_token(&mut body, format_args!("{note}{}", word.od));
                }
            }
        }
    }
    body
}

pub fn format_mscore(m: &MScore, start_time: NaiveDateTime) -> ScoreText {
    ScoreText {
        header: header(m.stream_index, start_time),
        body: format_body(m),
    }
}

/// Splits a two-line block (header, body) into a [`ScoreText`].
pub fn split_block(text: &str) -> ScoreText {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or_default().trim().to_string();
    let body = lines.collect::<Vec<_>>().join(" ");
    ScoreText { header, body }
}

fn parse_header(header: &str) -> Result<usize, NotationError> {
    let bad = || NotationError::BadHeader(header.to_string());
    let rest = header.strip_prefix("Thread No").ok_or_else(bad)?;
    let (index, rest) = rest.split_once(' ').ok_or_else(bad)?;
    let index = index.parse().map_err(|_| bad())?;
    let stamp = rest.strip_prefix("has started on ").ok_or_else(bad)?;
    NaiveDateTime::parse_from_str(stamp, TIMESTAMP_FORMAT).map_err(|_| bad())?;
    Ok(index)
}

enum Token {
    Tempo(String),
    Instrument(InstrumentName),
    Note(NoteLetter, OctaveDuration, String),
}

fn tokenize(body: &str) -> Result<Vec<Token>, NotationError> {
    let mut tokens = Vec::new();
    let mut rest = body.trim_start();
    while !rest.is_empty() {
        let len = if rest.starts_with("T[") || rest.starts_with("I[") {
            rest.find(']')
                .map(|i| i + 1)
                .ok_or_else(|| NotationError::BadToken(rest.to_string()))?
        } else {
            rest.find(char::is_whitespace).unwrap_or(rest.len())
        };
        let raw = &rest[..len];
        rest = rest[len..].trim_start();
        let bad = || NotationError::BadToken(raw.to_string());
        let token = if let Some(name) = raw.strip_prefix("T[") {
            let name = &name[..name.len() - 1];
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(bad());
            }
            Token::Tempo(name.to_string())
        } else if let Some(name) = raw.strip_prefix("I[") {
            Token::Instrument(InstrumentName::new(&name[..name.len() - 1]).ok_or_else(bad)?)
        } else {
            let mut chars = raw.chars();
            let letter = chars
                .next()
                .and_then(NoteLetter::from_char)
                .ok_or_else(bad)?;
            let od = chars
                .as_str()
                .parse::<OctaveDuration>()
                .map_err(|_| bad())?;
            Token::Note(letter, od, raw.to_string())
        };
        tokens.push(token);
    }
    Ok(tokens)
}

/// Splits a run of note tokens into words made of note-bag elements.
/// Exactly one split must exist.
fn group_run(
    run: &[(NoteLetter, OctaveDuration, String)],
    elements: &[&NoteElement],
) -> Result<Vec<Word>, NotationError> {
    let n = run.len();
    // ways[i]: number of splits of run[i..], capped at 2.
    let mut ways = vec![0u8; n + 1];
    let mut choice: Vec<Option<&NoteElement>> = vec![None; n];
    ways[n] = 1;
    for i in (0..n).rev() {
        for &e in elements {
            let len = e.len();
            if i + len > n || ways[i + len] == 0 {
                continue;
            }
            let part = &run[i..i + len];
            let od = part[0].1;
            if part
                .iter()
                .zip(e.notes())
                .all(|(t, l)| t.0 == *l && t.1 == od)
            {
                ways[i] = (ways[i] + ways[i + len]).min(2);
                choice[i] = Some(e);
            }
        }
    }
    let joined = || {
        run.iter()
            .map(|t| t.2.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    match ways[0] {
        0 => Err(NotationError::NotInBag(joined())),
        1 => {
            let mut words = Vec::new();
            let mut i = 0;
            while i < n {
                let e = choice[i].expect("a split exists");
                words.push(Word {
                    notes: e.clone(),
                    od: run[i].1,
                });
                i += e.len();
            }
            Ok(words)
        }
        _ => Err(NotationError::AmbiguousSequence(joined())),
    }
}

/// Parses a score back, using the note bag of `spec` to regroup note
/// sequences into words. The header timestamp is checked and dropped.
pub fn parse_mscore(text: &ScoreText, spec: &CompositionSpec) -> Result<MScore, NotationError> {
    let stream_index = parse_header(&text.header)?;
    let mut elements: Vec<&NoteElement> = Vec::new();
    for e in &spec.notes {
        if !elements.contains(&e) {
            elements.push(e);
        }
    }
    let mut events = Vec::new();
    let mut run = Vec::new();
    for token in tokenize(&text.body)? {
        match token {
            Token::Note(letter, od, raw) => {
                run.push((letter, od, raw));
                continue;
            }
            Token::Tempo(name) => {
                events.extend(
                    group_run(&run, &elements)?
                        .into_iter()
                        .map(ScoreEvent::Word),
                );
                run.clear();
                events.push(ScoreEvent::Tempo(name));
            }
            Token::Instrument(name) => {
                events.extend(
                    group_run(&run, &elements)?
                        .into_iter()
                        .map(ScoreEvent::Word),
                );
                run.clear();
                events.push(ScoreEvent::InstrumentChange(name));
            }
        }
    }
    events.extend(
        group_run(&run, &elements)?
            .into_iter()
            .map(ScoreEvent::Word),
    );
    Ok(MScore {
        stream_index,
        events,
    })
}
