//! Composition specifications: the four-row brace format and its bag semantics.
//!
//! ```text
//! {
//!   {"Relaxing, Oct 24, 2013"},
//!   {"A","C","E","G"},
//!   {"3q","2h","5w","h","4h"},
//!   {"Oboe","ELECTRIC_JAZZ_GUITAR","Atmosphere","Choir","Choir_AAHS"},
//! }
//! ```
//!
//! Row one is a free-form title, rows two to four are bags of note elements,
//! octave/duration tokens and instrument names. An optional fifth row holds
//! keywords. Bags keep order and duplicates; a duplicated entry is picked
//! proportionally more often. `//` starts a comment outside of strings.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::gm;
use crate::midi;

/// One of the seven natural pitch letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoteLetter {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl NoteLetter {
    pub const ALL: [NoteLetter; 7] = [
        NoteLetter::A,
        NoteLetter::B,
        NoteLetter::C,
        NoteLetter::D,
        NoteLetter::E,
        NoteLetter::F,
        NoteLetter::G,
    ];

    pub fn from_char(c: char) -> Option<NoteLetter> {
        Some(match c {
            'A' => NoteLetter::A,
            'B' => NoteLetter::B,
            'C' => NoteLetter::C,
            'D' => NoteLetter::D,
            'E' => NoteLetter::E,
            'F' => NoteLetter::F,
            'G' => NoteLetter::G,
            _ => return None,
        })
    }

    pub fn as_char(self) -> char {
        match self {
            NoteLetter::A => 'A',
            NoteLetter::B => 'B',
            NoteLetter::C => 'C',
            NoteLetter::D => 'D',
            NoteLetter::E => 'E',
            NoteLetter::F => 'F',
            NoteLetter::G => 'G',
        }
    }

    /// Semitones above C within one octave.
    pub fn semitone(self) -> u8 {
        match self {
            NoteLetter::C => 0,
            NoteLetter::D => 2,
            NoteLetter::E => 4,
            NoteLetter::F => 5,
            NoteLetter::G => 7,
            NoteLetter::A => 9,
            NoteLetter::B => 11,
        }
    }
}

impl fmt::Display for NoteLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// An entry of the note bag: one note, or a sequence of notes played one
/// after another as a single word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NoteElement(Vec<NoteLetter>);

impl NoteElement {
    pub fn new(notes: Vec<NoteLetter>) -> Option<NoteElement> {
        if notes.is_empty() {
            None
        } else {
            Some(NoteElement(notes))
        }
    }

    pub fn single(letter: NoteLetter) -> NoteElement {
        NoteElement(vec![letter])
    }

    pub fn notes(&self) -> &[NoteLetter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for NoteElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl FromStr for NoteElement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut notes = Vec::new();
        for part in s.split_whitespace() {
            let mut chars = part.chars();
            match (chars.next().and_then(NoteLetter::from_char), chars.next()) {
                (Some(letter), None) => notes.push(letter),
                _ => return Err(part.to_string()),
            }
        }
        NoteElement::new(notes).ok_or_else(|| s.to_string())
    }
}

/// Note length letter: whole, half, quarter or eighth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoteLength {
    Whole,
    Half,
    Quarter,
    Eighth,
}

impl NoteLength {
    pub const ALL: [NoteLength; 4] = [
        NoteLength::Whole,
        NoteLength::Half,
        NoteLength::Quarter,
        NoteLength::Eighth,
    ];

    pub fn from_char(c: char) -> Option<NoteLength> {
        Some(match c {
            'w' => NoteLength::Whole,
            'h' => NoteLength::Half,
            'q' => NoteLength::Quarter,
            'i' => NoteLength::Eighth,
            _ => return None,
        })
    }

    pub fn as_char(self) -> char {
        match self {
            NoteLength::Whole => 'w',
            NoteLength::Half => 'h',
            NoteLength::Quarter => 'q',
            NoteLength::Eighth => 'i',
        }
    }

    /// Length in eighth notes.
    pub fn eighths(self) -> u64 {
        match self {
            NoteLength::Whole => 8,
            NoteLength::Half => 4,
            NoteLength::Quarter => 2,
            NoteLength::Eighth => 1,
        }
    }
}

pub const MIN_OCTAVE: u8 = 1;
pub const MAX_OCTAVE: u8 = 10;

/// An octave/duration token such as `3q`, `10w` or plain `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OctaveDuration {
    octave: Option<u8>,
    length: NoteLength,
}

impl OctaveDuration {
    pub fn new(octave: Option<u8>, length: NoteLength) -> Option<OctaveDuration> {
        match octave {
            Some(o) if !(MIN_OCTAVE..=MAX_OCTAVE).contains(&o) => None,
            _ => Some(OctaveDuration { octave, length }),
        }
    }

    pub fn octave(&self) -> Option<u8> {
        self.octave
    }

    pub fn length(&self) -> NoteLength {
        self.length
    }
}

impl fmt::Display for OctaveDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(o) = self.octave {
            write!(f, "{o}")?;
        }
        write!(f, "{}", self.length.as_char())
    }
}

impl FromStr for OctaveDuration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || s.to_string();
        let last = s.chars().last().ok_or_else(bad)?;
        let length = NoteLength::from_char(last).ok_or_else(bad)?;
        let digits = &s[..s.len() - last.len_utf8()];
        let octave = match digits {
            "" => None,
            d if d.len() <= 2 && d.bytes().all(|b| b.is_ascii_digit()) && !d.starts_with('0') => {
                Some(d.parse::<u8>().map_err(|_| bad())?)
            }
            _ => return Err(bad()),
        };
        OctaveDuration::new(octave, length).ok_or_else(bad)
    }
}

/// An instrument name as written by the composer.
///
/// Names compare structurally as written; [`InstrumentName::key`] gives the
/// lookup form, where case is ignored and `_` and space are the same.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InstrumentName(String);

impl InstrumentName {
    pub fn new(name: impl Into<String>) -> Option<InstrumentName> {
        let name = name.into();
        let ok = !name.trim().is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ' ');
        ok.then_some(InstrumentName(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn key(&self) -> String {
        normalize_instrument(&self.0)
    }
}

impl fmt::Display for InstrumentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn normalize_instrument(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| match c {
            ' ' => '_',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionSpec {
    pub title: String,
    pub notes: Vec<NoteElement>,
    pub octave_durations: Vec<OctaveDuration>,
    pub instruments: Vec<InstrumentName>,
    pub keywords: BTreeSet<String>,
}

impl CompositionSpec {
    pub fn distinct_counts(&self) -> (usize, usize, usize) {
        distinct_counts(self)
    }

    /// Whether any note element is a sequence of more than one note.
    pub fn has_note_sequences(&self) -> bool {
        self.notes.iter().any(|e| e.len() > 1)
    }
}

impl FromStr for CompositionSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_spec(s)
    }
}

impl fmt::Display for CompositionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_spec(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected at least 4 rows, found {found}")]
    MissingRow { found: usize },
    #[error("expected at most 5 rows, found {found}")]
    TooManyRows { found: usize },
    #[error("row {row} is empty")]
    EmptyBag { row: usize },
    #[error("title row must hold exactly one string, found {found}")]
    BadTitle { found: usize },
    #[error("bad note token `{token}`")]
    BadNoteToken { token: String },
    #[error("bad octave/duration token `{token}`")]
    BadOctaveDuration { token: String },
    #[error("bad instrument name `{token}`")]
    BadInstrumentName { token: String },
    #[error("unbalanced braces")]
    UnbalancedBraces,
    #[error("unterminated string")]
    UnterminatedString,
    #[error("unexpected {found}, expected {expected}")]
    Unexpected {
        found: String,
        expected: &'static str,
    },
}

/// A parse failure with its 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
}

impl ParseError {
    /// Short machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self.kind {
            ParseErrorKind::MissingRow { .. } => "MissingRow",
            ParseErrorKind::TooManyRows { .. } => "TooManyRows",
            ParseErrorKind::EmptyBag { .. } => "EmptyBag",
            ParseErrorKind::BadTitle { .. } => "BadTitle",
            ParseErrorKind::BadNoteToken { .. } => "BadNoteToken",
            ParseErrorKind::BadOctaveDuration { .. } => "BadOctaveDuration",
            ParseErrorKind::BadInstrumentName { .. } => "BadInstrumentName",
            ParseErrorKind::UnbalancedBraces => "UnbalancedBraces",
            ParseErrorKind::UnterminatedString => "UnterminatedString",
            ParseErrorKind::Unexpected { .. } => "Unexpected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Comma,
    Str(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Open => "`{`".into(),
            Tok::Close => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Str(s) => format!("string \"{s}\""),
        }
    }
}

fn tokenize(text: &str) -> Result<(Vec<(Tok, Pos)>, Pos), ParseError> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos { line: 1, column: 1 };
    let advance = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    };
    while let Some(c) = chars.next() {
        let here = pos;
        advance(c, &mut pos);
        match c {
            '{' => toks.push((Tok::Open, here)),
            '}' => toks.push((Tok::Close, here)),
            ',' => toks.push((Tok::Comma, here)),
            '"' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            advance('"', &mut pos);
                            break;
                        }
                        Some(c) => {
                            advance(c, &mut pos);
                            s.push(c);
                        }
                        None => {
                            return Err(ParseError {
                                kind: ParseErrorKind::UnterminatedString,
                                line: here.line,
                                column: here.column,
                            })
                        }
                    }
                }
                toks.push((Tok::Str(s), here));
            }
            '/' if chars.peek() == Some(&'/') => {
                for c in chars.by_ref() {
                    advance(c, &mut pos);
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {}
            c => {
                return Err(ParseError {
                    kind: ParseErrorKind::Unexpected {
                        found: format!("character `{c}`"),
                        expected: "`{`, `}`, `,` or a quoted string",
                    },
                    line: here.line,
                    column: here.column,
                })
            }
        }
    }
    Ok((toks, pos))
}

struct Row {
    pos: Pos,
    items: Vec<(String, Pos)>,
}

struct RowParser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl RowParser {
    fn err(&self, kind: ParseErrorKind, pos: Pos) -> ParseError {
        ParseError {
            kind,
            line: pos.line,
            column: pos.column,
        }
    }

    fn peek(&self) -> Option<&(Tok, Pos)> {
        self.toks.get(self.at)
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some((tok, pos)) => self.err(
                ParseErrorKind::Unexpected {
                    found: tok.describe(),
                    expected,
                },
                *pos,
            ),
            None => self.err(ParseErrorKind::UnbalancedBraces, self.end),
        }
    }

    fn expect_open(&mut self, expected: &'static str) -> Result<Pos, ParseError> {
        match self.peek() {
            Some((Tok::Open, pos)) => {
                let pos = *pos;
                self.at += 1;
                Ok(pos)
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    /// Parses `'{' item (',' item)* ','? '}'` where items are produced by `item`.
    fn list<F>(&mut self, mut item: F, expected: &'static str) -> Result<(), ParseError>
    where
        F: FnMut(&mut RowParser) -> Result<bool, ParseError>,
    {
        loop {
            match self.peek() {
                Some((Tok::Close, _)) => {
                    self.at += 1;
                    return Ok(());
                }
                Some(_) => {
                    if !item(self)? {
                        return Err(self.unexpected(expected));
                    }
                    match self.peek() {
                        Some((Tok::Comma, _)) => self.at += 1,
                        Some((Tok::Close, _)) => {}
                        _ => return Err(self.unexpected("`,` or `}`")),
                    }
                }
                None => return Err(self.err(ParseErrorKind::UnbalancedBraces, self.end)),
            }
        }
    }

    fn row(&mut self) -> Result<Row, ParseError> {
        let pos = self.expect_open("`{` starting a row")?;
        let mut items = Vec::new();
        self.list(
            |p| match p.peek() {
                Some((Tok::Str(s), pos)) => {
                    items.push((s.clone(), *pos));
                    p.at += 1;
                    Ok(true)
                }
                _ => Ok(false),
            },
            "a quoted string",
        )?;
        Ok(Row { pos, items })
    }

    fn document(&mut self) -> Result<(Vec<Row>, Pos), ParseError> {
        let open = self.expect_open("`{` starting the specification")?;
        let mut rows = Vec::new();
        self.list(
            |p| match p.peek() {
                Some((Tok::Open, _)) => {
                    rows.push(p.row()?);
                    Ok(true)
                }
                _ => Ok(false),
            },
            "`{` starting a row",
        )?;
        if let Some((tok, pos)) = self.peek() {
            let kind = if *tok == Tok::Close {
                ParseErrorKind::UnbalancedBraces
            } else {
                ParseErrorKind::Unexpected {
                    found: tok.describe(),
                    expected: "end of input",
                }
            };
            return Err(self.err(kind, *pos));
        }
        Ok((rows, open))
    }
}

/// Parses the brace format into a [`CompositionSpec`].
pub fn parse_spec(text: &str) -> Result<CompositionSpec, ParseError> {
    let (toks, end) = tokenize(text)?;
    let mut parser = RowParser { toks, at: 0, end };
    let (rows, open) = parser.document()?;
    let at = |kind, pos: Pos| ParseError {
        kind,
        line: pos.line,
        column: pos.column,
    };
    if rows.len() < 4 {
        return Err(at(ParseErrorKind::MissingRow { found: rows.len() }, open));
    }
    if rows.len() > 5 {
        return Err(at(
            ParseErrorKind::TooManyRows { found: rows.len() },
            rows[5].pos,
        ));
    }
    for (i, row) in rows.iter().enumerate().take(4) {
        if row.items.is_empty() {
            return Err(at(ParseErrorKind::EmptyBag { row: i + 1 }, row.pos));
        }
    }
    if rows[0].items.len() != 1 {
        return Err(at(
            ParseErrorKind::BadTitle {
                found: rows[0].items.len(),
            },
            rows[0].pos,
        ));
    }
    let title = rows[0].items[0].0.clone();

    let notes = rows[1]
        .items
        .iter()
        .map(|(s, pos)| {
            s.parse::<NoteElement>()
                .map_err(|token| at(ParseErrorKind::BadNoteToken { token }, *pos))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let octave_durations = rows[2]
        .items
        .iter()
        .map(|(s, pos)| {
            s.trim()
                .parse::<OctaveDuration>()
                .map_err(|_| at(ParseErrorKind::BadOctaveDuration { token: s.clone() }, *pos))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let instruments = rows[3]
        .items
        .iter()
        .map(|(s, pos)| {
            InstrumentName::new(s.trim())
                .ok_or_else(|| at(ParseErrorKind::BadInstrumentName { token: s.clone() }, *pos))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let keywords = rows
        .get(4)
        .map(|row| {
            row.items
                .iter()
                .map(|(s, _)| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
        .unwrap_or_default();

    Ok(CompositionSpec {
        title,
        notes,
        octave_durations,
        instruments,
        keywords,
    })
}

fn write_row<I, T>(out: &mut String, items: I)
where
    I: IntoIterator<Item = T>,
    T: fmt::Display,
{
    out.push_str("  {");
    for (i, item) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('"');
        out.push_str(&item.to_string());
        out.push('"');
    }
    out.push('}');
}

/// Writes `spec` in the brace format, one row per line. The keyword row is
/// emitted only when there are keywords.
pub fn serialize_spec(spec: &CompositionSpec) -> String {
    let mut out = String::from("{\n");
    write_row(&mut out, [&spec.title]);
    out.push_str(",\n");
    write_row(&mut out, &spec.notes);
    out.push_str(",\n");
    write_row(&mut out, &spec.octave_durations);
    out.push_str(",\n");
    write_row(&mut out, &spec.instruments);
    if !spec.keywords.is_empty() {
        out.push_str(",\n");
        write_row(&mut out, &spec.keywords);
    }
    out.push_str("\n}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("note {letter}{octave} maps to MIDI note {number}, above 127")]
    NoteOutOfRange {
        letter: NoteLetter,
        octave: u8,
        number: u16,
    },
    #[error("unknown instrument `{0}`")]
    UnknownInstrument(String),
}

/// Checks every reachable note against the MIDI range and every instrument
/// against the General MIDI table.
pub fn validate_spec(spec: &CompositionSpec) -> Vec<Violation> {
    let mut violations = Vec::new();
    let letters: BTreeSet<NoteLetter> = spec
        .notes
        .iter()
        .flat_map(|e| e.notes().iter().copied())
        .collect();
    let octaves: BTreeSet<u8> = spec
        .octave_durations
        .iter()
        .map(|od| od.octave().unwrap_or(midi::DEFAULT_OCTAVE))
        .collect();
    for &octave in &octaves {
        for &letter in &letters {
            let number = midi::raw_note_number(letter, octave);
            if number > 127 {
                violations.push(Violation::NoteOutOfRange {
                    letter,
                    octave,
                    number,
                });
            }
        }
    }
    let mut seen = HashSet::new();
    for name in &spec.instruments {
        if gm::program_for(name.as_str()).is_none() && seen.insert(name.key()) {
            violations.push(Violation::UnknownInstrument(name.as_str().to_string()));
        }
    }
    violations
}

/// Number of distinct note elements, octave/duration tokens and instruments.
/// Duplicates collapse; instruments are compared by their lookup key.
pub fn distinct_counts(spec: &CompositionSpec) -> (usize, usize, usize) {
    let notes: HashSet<&NoteElement> = spec.notes.iter().collect();
    let ods: HashSet<&OctaveDuration> = spec.octave_durations.iter().collect();
    let instruments: HashSet<String> = spec.instruments.iter().map(|i| i.key()).collect();
    (notes.len(), ods.len(), instruments.len())
}
