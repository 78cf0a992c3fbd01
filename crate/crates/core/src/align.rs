//! The algorithmic stages of the paired-data pipeline: rule-based lyric
//! cleaning, slicing timed lyrics into roughly 10-second segments, and the
//! DTW word-to-note alignment that turns separate word and note timelines
//! into paired song tuples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{CodecConfig, CodecError};
use crate::song::{is_cjk, EntryKind, Language, SongEntry, SongTuple, TimedInterval};
use crate::song::QuantizedNote;
use crate::vocab::{PitchToken, VocabError};

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("need at least as many notes as words, got {words} words and {notes} notes")]
    FewerNotesThanWords { words: usize, notes: usize },
    #[error("word list is empty")]
    EmptyWords,
    #[error("note list is empty")]
    EmptyNotes,
    #[error("cannot read {0:?} as a pitch (note name or MIDI number)")]
    BadPitchLabel(String),
    #[error("alignment does not cover the given words and notes")]
    MismatchedAlignment,
    #[error("line grouping covers {grouped} words, alignment has {words}")]
    BadLineGrouping { grouped: usize, words: usize },
    #[error("lrc line {line}: {reason}")]
    BadLrc { line: usize, reason: String },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

/// A cleaned lyric line with sentence-level timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedLyricLine {
    pub text: String,
    pub start: f64,
    pub end: f64,
}

/// A slice of consecutive lyric lines, roughly ten seconds long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lines: Vec<TimedLyricLine>,
}

impl Segment {
    pub fn start(&self) -> f64 {
        self.lines.first().map_or(0.0, |l| l.start)
    }

    pub fn end(&self) -> f64 {
        self.lines.last().map_or(0.0, |l| l.end)
    }

    pub fn span(&self) -> f64 {
        self.end() - self.start()
    }
}

/// A contiguous, inclusive range of note indices belonging to one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteRange {
    pub start: usize,
    pub end: usize,
}

impl NoteRange {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false // ranges always hold at least one note
    }
}

/// Word-to-note assignment: ranges are consecutive, non-overlapping, and
/// cover every note exactly once; entry `i` belongs to word `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub ranges: Vec<NoteRange>,
}

impl Alignment {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, NoteRange)> + '_ {
        self.ranges.iter().copied().enumerate()
    }
}

fn is_latin_letter(c: char) -> bool {
    c.is_alphabetic() && c <= '\u{024F}'
}

/// Repeat markers like "x3", "X2", or "3x" that survive punctuation
/// stripping but carry no lyric content.
fn is_repeat_marker(token: &str) -> bool {
    let lower = token.to_lowercase();
    let bytes = lower.as_bytes();
    if bytes.len() < 2 {
        return false;
    }
    let digits_then_x = bytes[..bytes.len() - 1].iter().all(u8::is_ascii_digit)
        && (bytes[bytes.len() - 1] == b'x');
    let x_then_digits =
        bytes[0] == b'x' && bytes[1..].iter().all(u8::is_ascii_digit);
    digits_then_x || x_then_digits
}

fn collapse_runs(units: Vec<String>, keep: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(units.len());
    let mut run = 0usize;
    for unit in units {
        if out.last() == Some(&unit) {
            run += 1;
        } else {
            run = 1;
        }
        if run <= keep {
            out.push(unit);
        }
    }
    out
}

/// Cleans raw lyric text into plain lines:
///
/// 1. lines with no target-language characters are dropped;
/// 2. punctuation and symbols are stripped (everything that is neither
///    alphanumeric nor whitespace), repeat markers like "x3" are removed,
///    and whitespace collapses — English keeps single inter-word spaces,
///    Chinese keeps none;
/// 3. a token repeated four or more times in a row collapses to three, and
///    a line repeated three or more times in a row keeps only two copies.
///
/// The result can be empty; cleaning the output again changes nothing.
pub fn clean_lyrics(raw: &str, language: Language) -> Vec<String> {
    let is_target = |c: char| match language {
        Language::English => is_latin_letter(c),
        Language::Chinese => is_cjk(c),
        Language::Unspecified => is_latin_letter(c) || is_cjk(c),
    };

    let mut lines: Vec<String> = Vec::new();
    for raw_line in raw.lines() {
        if !raw_line.chars().any(is_target) {
            continue;
        }
        let stripped: String = raw_line
            .chars()
            .filter(|&c| c.is_alphanumeric() || c.is_whitespace())
            .collect();
        let tokens: Vec<&str> = stripped
            .split_whitespace()
            .filter(|t| !is_repeat_marker(t))
            .collect();
        if tokens.is_empty() {
            continue;
        }
        let char_units = match language {
            Language::English => false,
            Language::Chinese => true,
            Language::Unspecified => raw_line.chars().any(is_cjk),
        };
        let units: Vec<String> = if char_units {
            tokens.concat().chars().map(String::from).collect()
        } else {
            tokens.iter().map(|t| t.to_string()).collect()
        };
        let collapsed = collapse_runs(units, 3);
        let joined = collapsed.join(if char_units { "" } else { " " });
        if !joined.is_empty() {
            lines.push(joined);
        }
    }
    collapse_runs(lines, 2)
}

/// Greedy segment slicing: append whole lines until the segment spans at
/// least `target_seconds` or holds three lines, then close it. The last
/// segment may be short; lines are never split.
pub fn slice_segments(lines: &[TimedLyricLine], target_seconds: f64) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut current: Vec<TimedLyricLine> = Vec::new();
    for line in lines {
        current.push(line.clone());
        let span = current.last().unwrap().end - current.first().unwrap().start;
        if span >= target_seconds || current.len() >= 3 {
            segments.push(Segment { lines: std::mem::take(&mut current) });
        }
    }
    if !current.is_empty() {
        segments.push(Segment { lines: current });
    }
    segments
}

/// Intersection over union of two time intervals; 0 when disjoint.
pub fn interval_iou(a: &TimedInterval, b: &TimedInterval) -> f64 {
    let inter = (a.offset.min(b.offset) - a.onset.max(b.onset)).max(0.0);
    let union = (a.offset - a.onset) + (b.offset - b.onset) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Move {
    Extend,
    Advance,
}

/// Aligns words to notes by dynamic time warping over start/end times.
///
/// Every word takes a contiguous, non-empty run of notes; together the runs
/// cover all notes in order. The assignment minimizes the summed local cost
/// `1 - IoU(word interval, note interval)`; when extending the current
/// word's run and advancing to the next word cost the same, the word keeps
/// growing (melismas stay intact).
pub fn align_words_to_notes(
    words: &[TimedInterval],
    notes: &[TimedInterval],
) -> Result<Alignment, AlignError> {
    if words.is_empty() {
        return Err(AlignError::EmptyWords);
    }
    if notes.is_empty() {
        return Err(AlignError::EmptyNotes);
    }
    let (w, n) = (words.len(), notes.len());
    if n < w {
        return Err(AlignError::FewerNotesThanWords { words: w, notes: n });
    }

    let mut dp = vec![vec![f64::INFINITY; n + 1]; w + 1];
    let mut parent = vec![vec![Move::Advance; n + 1]; w + 1];
    dp[0][0] = 0.0;
    for i in 1..=w {
        // Leave enough notes for the remaining words.
        for j in i..=(n - (w - i)) {
            let local = 1.0 - interval_iou(&words[i - 1], &notes[j - 1]);
            let extend = if j > i { dp[i][j - 1] } else { f64::INFINITY };
            let advance = dp[i - 1][j - 1];
            if extend <= advance {
                dp[i][j] = extend + local;
                parent[i][j] = Move::Extend;
            } else {
                dp[i][j] = advance + local;
                parent[i][j] = Move::Advance;
            }
        }
    }

    let mut ranges = vec![NoteRange { start: 0, end: 0 }; w];
    let (mut i, mut j) = (w, n);
    let mut end = n;
    while i >= 1 {
        match parent[i][j] {
            Move::Extend => j -= 1,
            Move::Advance => {
                ranges[i - 1] = NoteRange { start: j - 1, end: end - 1 };
                end = j - 1;
                i -= 1;
                j -= 1;
            }
        }
    }
    Ok(Alignment { ranges })
}

/// Total cost of an alignment under the same local cost DTW minimizes.
pub fn alignment_cost(
    words: &[TimedInterval],
    notes: &[TimedInterval],
    alignment: &Alignment,
) -> f64 {
    alignment
        .pairs()
        .map(|(w, range)| {
            (range.start..=range.end)
                .map(|n| 1.0 - interval_iou(&words[w], &notes[n]))
                .sum::<f64>()
        })
        .sum()
}

fn pitch_from_label(label: &str) -> Result<u8, AlignError> {
    if let Ok(midi) = label.parse::<u8>() {
        if midi <= 127 {
            return Ok(midi);
        }
    }
    label
        .parse::<PitchToken>()
        .map(PitchToken::midi)
        .map_err(|_| AlignError::BadPitchLabel(label.to_string()))
}

/// Builds a paired entry from aligned words and notes: one tuple per word
/// carrying its aligned notes, quantized through the duration codec. Line
/// breaks come from `words_per_line` (sizes summing to the word count; empty
/// means a single line). Note durations follow the triplet rules: rest is
/// the gap to the next note in the flat sequence, 0 after the last.
pub fn build_paired_entry(
    words: &[TimedInterval],
    notes: &[TimedInterval],
    alignment: &Alignment,
    language: Language,
    words_per_line: &[usize],
    codec: &CodecConfig,
) -> Result<SongEntry, AlignError> {
    if alignment.ranges.len() != words.len() {
        return Err(AlignError::MismatchedAlignment);
    }
    let covered: usize = alignment.ranges.iter().map(NoteRange::len).sum();
    if covered != notes.len()
        || alignment.ranges.first().map(|r| r.start) != Some(0)
        || alignment.ranges.last().map(|r| r.end) != Some(notes.len() - 1)
    {
        return Err(AlignError::MismatchedAlignment);
    }

    let mut quantized = Vec::with_capacity(notes.len());
    for (k, note) in notes.iter().enumerate() {
        let pitch = PitchToken::from_midi(pitch_from_label(&note.label)?)?;
        let rest = match notes.get(k + 1) {
            Some(next) => next.onset - note.offset,
            None => 0.0,
        };
        quantized.push(QuantizedNote {
            pitch,
            duration_bin: codec.encode(note.offset - note.onset)?,
            rest_bin: codec.encode(rest)?,
        });
    }

    let mut tuples: Vec<SongTuple> = alignment
        .pairs()
        .map(|(w, range)| {
            SongTuple::paired(words[w].label.clone(), quantized[range.start..=range.end].to_vec())
        })
        .collect();

    let grouping: Vec<usize> = if words_per_line.is_empty() {
        vec![words.len()]
    } else {
        words_per_line.to_vec()
    };
    if grouping.iter().sum::<usize>() != words.len() || grouping.contains(&0) {
        return Err(AlignError::BadLineGrouping {
            grouped: grouping.iter().sum(),
            words: words.len(),
        });
    }
    let mut lines = Vec::with_capacity(grouping.len());
    for count in grouping {
        let rest = tuples.split_off(count);
        lines.push(std::mem::replace(&mut tuples, rest));
    }
    Ok(SongEntry::new(EntryKind::Paired, language, lines))
}

/// Parses LRC-style timed lyrics: each line `[mm:ss.cc] text`. Metadata
/// tags like `[ti:...]` are skipped. A line ends where the next one starts;
/// the last line gets the mean duration of the others (5 s when alone).
pub fn parse_lrc(text: &str) -> Result<Vec<TimedLyricLine>, AlignError> {
    let mut stamped: Vec<(f64, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || !line.starts_with('[') {
            continue;
        }
        let Some(close) = line.find(']') else { continue };
        let tag = &line[1..close];
        let Some((min_str, sec_str)) = tag.split_once(':') else { continue };
        let Ok(minutes) = min_str.parse::<u32>() else { continue };
        let seconds: f64 = sec_str.parse().map_err(|_| AlignError::BadLrc {
            line: idx + 1,
            reason: format!("bad seconds field {sec_str:?}"),
        })?;
        if !(0.0..60.0).contains(&seconds) {
            return Err(AlignError::BadLrc {
                line: idx + 1,
                reason: format!("seconds {seconds} out of range"),
            });
        }
        let start = f64::from(minutes) * 60.0 + seconds;
        stamped.push((start, line[close + 1..].trim().to_string()));
    }
    stamped.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = stamped.len();
    let mut lines = Vec::with_capacity(n);
    for i in 0..n {
        let (start, ref text) = stamped[i];
        let end = if i + 1 < n {
            stamped[i + 1].0
        } else if n > 1 {
            let mean = (stamped[n - 1].0 - stamped[0].0) / (n - 1) as f64;
            start + mean
        } else {
            start + 5.0
        };
        lines.push(TimedLyricLine { text: text.clone(), start, end });
    }
    Ok(lines)
}
