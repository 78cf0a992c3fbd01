//! The LLM-facing tuple text format. A document is a header naming what the
//! entry holds, then one line per song line: an ordinal prompt followed by
//! `|`-separated tuples. A lyric tuple is the bare word, a melody tuple is
//! `⟨pitch⟩,⟨d_xxx⟩,⟨d_yyy⟩`, and a paired tuple is the word followed by one
//! or more such note triples, all comma-separated.
//!
//! `parse` is the exact inverse of `serialize` on its image and reports the
//! first problem with a 1-based line/column position; it never panics, no
//! matter the input.

use std::fmt;

use thiserror::Error;

use crate::song::{infer_language, reserved_word_char, EntryKind, SongEntry, SongTuple};
use crate::song::QuantizedNote;
use crate::vocab::{duration_token_text, pitch_token_text, PitchToken, DURATION_BINS};

pub const HEADER_PURE_LYRIC: &str = "The following is the lyrics:";
pub const HEADER_PURE_MELODY: &str = "The following is the melody:";
pub const HEADER_PAIRED: &str = "The following is a song with both lyrics and melody:";

const ORDINAL_WORDS: [&str; 20] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth",
    "tenth", "eleventh", "twelfth", "thirteenth", "fourteenth", "fifteenth", "sixteenth",
    "seventeenth", "eighteenth", "nineteenth", "twentieth",
];

/// English ordinal for a 1-based line number: words up to "twentieth",
/// numeric ("21st", "22nd", ...) beyond.
pub fn ordinal(n: usize) -> String {
    assert!(n >= 1, "line numbers start at 1");
    if n <= 20 {
        return ORDINAL_WORDS[n - 1].to_string();
    }
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn line_prompt(n: usize) -> String {
    format!("The {} line: ", ordinal(n))
}

/// A rendered document: the header plus one body line per song line, each
/// terminated by a newline when written out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleTextDocument {
    pub header: String,
    pub body_lines: Vec<String>,
}

impl fmt::Display for TupleTextDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.header)?;
        for line in &self.body_lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SerializeError {
    #[error("entry failed validation: {}", .0.join("; "))]
    InvalidEntry(Vec<String>),
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}, column {column}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub reason: String,
}

impl ParseError {
    fn new(line: usize, column: usize, reason: impl Into<String>) -> Self {
        Self { line, column, reason: reason.into() }
    }
}

fn render_note(note: &QuantizedNote) -> String {
    format!(
        "{},{},{}",
        pitch_token_text(note.pitch),
        duration_token_text(note.duration_bin),
        duration_token_text(note.rest_bin)
    )
}

fn render_tuple(kind: EntryKind, tuple: &SongTuple) -> String {
    match kind {
        EntryKind::PureLyric => tuple.word.clone().unwrap_or_default(),
        EntryKind::PureMelody => render_note(&tuple.notes[0]),
        EntryKind::Paired => {
            let mut out = tuple.word.clone().unwrap_or_default();
            for note in &tuple.notes {
                out.push(',');
                out.push_str(&render_note(note));
            }
            out
        }
    }
}

/// Renders a validated entry into its document form.
pub fn document(entry: &SongEntry) -> Result<TupleTextDocument, SerializeError> {
    let violations = entry.validate();
    if !violations.is_empty() {
        return Err(SerializeError::InvalidEntry(violations));
    }
    let header = match entry.kind {
        EntryKind::PureLyric => HEADER_PURE_LYRIC,
        EntryKind::PureMelody => HEADER_PURE_MELODY,
        EntryKind::Paired => HEADER_PAIRED,
    };
    let body_lines = entry
        .lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let tuples: Vec<String> = line.iter().map(|t| render_tuple(entry.kind, t)).collect();
            format!("{}{}", line_prompt(i + 1), tuples.join("|"))
        })
        .collect();
    Ok(TupleTextDocument { header: header.to_string(), body_lines })
}

/// Serializes a validated entry to tuple text: UTF-8, `\n` line endings,
/// no trailing blank line.
pub fn serialize(entry: &SongEntry) -> Result<String, SerializeError> {
    Ok(document(entry)?.to_string())
}

struct LineParser<'a> {
    text: &'a str,
    line_no: usize,
    /// Char column where `text` starts within the document line.
    base_col: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, consumed_chars: usize, reason: impl Into<String>) -> ParseError {
        ParseError::new(self.line_no, self.base_col + consumed_chars, reason)
    }
}

fn parse_word(p: &LineParser, col: usize, word: &str) -> Result<String, ParseError> {
    if word.is_empty() {
        return Err(p.err(col, "empty word"));
    }
    if let Some(c) = word.chars().find(|&c| reserved_word_char(c) && c != ',') {
        return Err(p.err(col, format!("reserved character {c:?} in word")));
    }
    if word.contains('\u{27E8}') || word.contains('\u{27E9}') {
        return Err(p.err(col, "token where a word was expected"));
    }
    Ok(word.to_string())
}

fn token_inner<'a>(p: &LineParser, col: usize, s: &'a str) -> Result<&'a str, ParseError> {
    let inner = s
        .strip_prefix('\u{27E8}')
        .and_then(|rest| rest.strip_suffix('\u{27E9}'))
        .ok_or_else(|| p.err(col, format!("expected \u{27E8}\u{2026}\u{27E9} token, got {s:?}")))?;
    if inner.contains('\u{27E8}') || inner.contains('\u{27E9}') {
        return Err(p.err(col, format!("unknown token {s:?}")));
    }
    Ok(inner)
}

fn parse_pitch(p: &LineParser, col: usize, s: &str) -> Result<PitchToken, ParseError> {
    let inner = token_inner(p, col, s)?;
    inner
        .parse::<PitchToken>()
        .map_err(|_| p.err(col, format!("unknown token {s:?} (expected a pitch)")))
}

fn parse_duration_bin(p: &LineParser, col: usize, s: &str) -> Result<u16, ParseError> {
    let inner = token_inner(p, col, s)?;
    let digits = inner
        .strip_prefix("d_")
        .filter(|d| d.len() == 3 && d.bytes().all(|b| b.is_ascii_digit()))
        .ok_or_else(|| p.err(col, format!("unknown token {s:?} (expected a duration bin)")))?;
    let bin: u16 = digits.parse().expect("three ascii digits");
    if bin >= DURATION_BINS {
        return Err(p.err(col, format!("unknown token {s:?} (bins end at {})", DURATION_BINS - 1)));
    }
    Ok(bin)
}

/// Parses the comma-separated elements of one tuple. `elements` carries
/// (char column, element text) pairs.
fn parse_tuple(
    p: &LineParser,
    kind: EntryKind,
    tuple_col: usize,
    elements: &[(usize, &str)],
) -> Result<SongTuple, ParseError> {
    match kind {
        EntryKind::PureLyric => {
            // The whole tuple is the word; commas were not split off.
            let (col, word) = elements[0];
            if word.contains(',') {
                return Err(p.err(col, "comma not allowed in a lyric tuple"));
            }
            Ok(SongTuple::lyric(parse_word(p, col, word)?))
        }
        EntryKind::PureMelody => {
            if elements.len() != 3 {
                return Err(p.err(
                    tuple_col,
                    format!(
                        "arity: melody tuple needs pitch,duration,rest (3 tokens), got {}",
                        elements.len()
                    ),
                ));
            }
            let pitch = parse_pitch(p, elements[0].0, elements[0].1)?;
            let duration_bin = parse_duration_bin(p, elements[1].0, elements[1].1)?;
            let rest_bin = parse_duration_bin(p, elements[2].0, elements[2].1)?;
            Ok(SongTuple::melody(QuantizedNote { pitch, duration_bin, rest_bin }))
        }
        EntryKind::Paired => {
            if elements.len() < 4 || !(elements.len() - 1).is_multiple_of(3) {
                return Err(p.err(
                    tuple_col,
                    format!(
                        "arity: paired tuple needs a word plus note triples (1+3k elements), got {}",
                        elements.len()
                    ),
                ));
            }
            let word = parse_word(p, elements[0].0, elements[0].1)?;
            let mut notes = Vec::with_capacity((elements.len() - 1) / 3);
            for triple in elements[1..].chunks_exact(3) {
                notes.push(QuantizedNote {
                    pitch: parse_pitch(p, triple[0].0, triple[0].1)?,
                    duration_bin: parse_duration_bin(p, triple[1].0, triple[1].1)?,
                    rest_bin: parse_duration_bin(p, triple[2].0, triple[2].1)?,
                });
            }
            Ok(SongTuple::paired(word, notes))
        }
    }
}

fn split_with_columns(s: &str, sep: char, base_col: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut col = base_col;
    for part in s.split(sep) {
        out.push((col, part));
        col += part.chars().count() + 1;
    }
    out
}

/// Parses a tuple text document back into a song entry. The kind comes from
/// the header; the language is inferred from the words (any CJK character
/// means Chinese, any word at all means English, none means Unspecified),
/// which is exactly the rule entry validation holds serialization to.
pub fn parse(text: &str) -> Result<SongEntry, ParseError> {
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| ParseError::new(1, 1, "document must end with a newline"))?;
    let mut doc_lines = body.split('\n');

    let header = doc_lines.next().unwrap_or("");
    let kind = match header {
        HEADER_PURE_LYRIC => EntryKind::PureLyric,
        HEADER_PURE_MELODY => EntryKind::PureMelody,
        HEADER_PAIRED => EntryKind::Paired,
        _ => return Err(ParseError::new(1, 1, format!("unknown header {header:?}"))),
    };

    let mut lines: Vec<Vec<SongTuple>> = Vec::new();
    for (idx, raw_line) in doc_lines.enumerate() {
        let line_no = idx + 2; // 1-based, after the header
        let prompt = line_prompt(idx + 1);
        let content = raw_line.strip_prefix(&prompt).ok_or_else(|| {
            ParseError::new(line_no, 1, format!("expected line prompt {prompt:?}"))
        })?;
        let parser = LineParser {
            text: content,
            line_no,
            base_col: prompt.chars().count() + 1,
        };
        let mut tuples = Vec::new();
        for (tuple_col, tuple_text) in split_with_columns(parser.text, '|', 0) {
            let elements = if kind == EntryKind::PureLyric {
                vec![(tuple_col, tuple_text)]
            } else {
                split_with_columns(tuple_text, ',', tuple_col)
            };
            tuples.push(parse_tuple(&parser, kind, tuple_col, &elements)?);
        }
        lines.push(tuples);
    }

    if lines.is_empty() {
        return Err(ParseError::new(1, 1, "document has no body lines"));
    }

    let language = infer_language(lines.iter().flatten().filter_map(|t| t.word.as_deref()));
    Ok(SongEntry { kind, language, lines })
}
