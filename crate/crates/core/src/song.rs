//! Shared domain types: melody triplets, quantized notes, song tuples and
//! entries, plus the primitive transformations every other module builds on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::{PitchToken, PITCH_TOKENS};

/// One note of a melody: pitch plus how long it sounds and how long the
/// silence after it lasts. Rest durations go negative when the next note
/// starts before this one ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(u8, f64, f64)", into = "(u8, f64, f64)")]
pub struct MelodyTriplet {
    /// MIDI note number, 0-127, 60 = Middle C.
    pub pitch: u8,
    /// Sounding time in seconds.
    pub note_duration: f64,
    /// Silence before the next note in seconds; negative on overlap.
    pub rest_duration: f64,
}

impl From<(u8, f64, f64)> for MelodyTriplet {
    fn from((pitch, note_duration, rest_duration): (u8, f64, f64)) -> Self {
        Self { pitch, note_duration, rest_duration }
    }
}

impl From<MelodyTriplet> for (u8, f64, f64) {
    fn from(t: MelodyTriplet) -> Self {
        (t.pitch, t.note_duration, t.rest_duration)
    }
}

/// A sounding note with absolute timestamps, the unit MIDI extraction and
/// alignment work with before durations are made relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoteEvent {
    pub pitch: u8,
    pub onset: f64,
    pub offset: f64,
}

/// A labelled interval on the song timeline: a word or a note with its
/// onset/offset in seconds. This is what the alignment stage consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedInterval {
    /// A lyric word or a pitch name such as "C4" (MIDI numbers also parse).
    pub label: String,
    pub onset: f64,
    pub offset: f64,
}

/// A note after quantization: pitch token plus discrete duration/rest bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedNote {
    pub pitch: PitchToken,
    pub duration_bin: u16,
    pub rest_bin: u16,
}

/// One unit of a song line: a lyric word, a note, or a word with the notes
/// it is sung over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongTuple {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<QuantizedNote>,
}

impl SongTuple {
    pub fn lyric(word: impl Into<String>) -> Self {
        Self { word: Some(word.into()), notes: Vec::new() }
    }

    pub fn melody(note: QuantizedNote) -> Self {
        Self { word: None, notes: vec![note] }
    }

    pub fn paired(word: impl Into<String>, notes: Vec<QuantizedNote>) -> Self {
        Self { word: Some(word.into()), notes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    PureLyric,
    PureMelody,
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    English,
    Chinese,
    Unspecified,
}

/// A song (or song segment): ordered lines of tuples, all of one kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongEntry {
    pub kind: EntryKind,
    pub language: Language,
    pub lines: Vec<Vec<SongTuple>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SongError {
    #[error("pitch {midi} shifted by {semitones} leaves the vocabulary [0, 119]")]
    OutOfRange { midi: i32, semitones: i32 },
    #[error("operation requires a {expected:?} or {also:?} entry, got {got:?}")]
    KindMismatch { expected: EntryKind, also: EntryKind, got: EntryKind },
    #[error("empty input")]
    EmptyInput,
}

/// True for the CJK unified ideograph ranges cleaned Chinese lyrics draw from.
pub fn is_cjk(c: char) -> bool {
    matches!(c,
        '\u{4E00}'..='\u{9FFF}' | '\u{3400}'..='\u{4DBF}' | '\u{F900}'..='\u{FAFF}')
}

/// Language implied by a set of lyric words: any CJK character makes it
/// Chinese, any word at all makes it English, no words means Unspecified.
pub fn infer_language<'a>(words: impl IntoIterator<Item = &'a str>) -> Language {
    let mut saw_word = false;
    for w in words {
        saw_word = true;
        if w.chars().any(is_cjk) {
            return Language::Chinese;
        }
    }
    if saw_word {
        Language::English
    } else {
        Language::Unspecified
    }
}

/// Characters that cannot appear inside a lyric word because the tuple text
/// format reserves them.
pub(crate) fn reserved_word_char(c: char) -> bool {
    c == '|' || c == ',' || c == '\u{27E8}' || c == '\u{27E9}' || c.is_whitespace()
}

impl SongEntry {
    pub fn new(kind: EntryKind, language: Language, lines: Vec<Vec<SongTuple>>) -> Self {
        Self { kind, language, lines }
    }

    /// All lyric words in reading order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.lines
            .iter()
            .flatten()
            .filter_map(|t| t.word.as_deref())
    }

    /// Checks every structural invariant; the returned list is empty iff the
    /// entry is valid. Violations are data, not errors: each one names the
    /// line index, tuple index, and the broken rule.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.lines.is_empty() {
            violations.push("entry: no lines".to_string());
        }
        for (i, line) in self.lines.iter().enumerate() {
            if line.is_empty() {
                violations.push(format!("line {i}: empty"));
            }
            for (j, tuple) in line.iter().enumerate() {
                self.validate_tuple(i, j, tuple, &mut violations);
            }
        }
        let inferred = infer_language(self.words());
        if self.language != inferred {
            violations.push(format!(
                "entry: language {:?} does not match content (inferred {:?})",
                self.language, inferred
            ));
        }
        violations
    }

    fn validate_tuple(&self, i: usize, j: usize, tuple: &SongTuple, out: &mut Vec<String>) {
        match self.kind {
            EntryKind::PureLyric => {
                if tuple.word.is_none() {
                    out.push(format!("line {i} tuple {j}: missing word"));
                }
                if !tuple.notes.is_empty() {
                    out.push(format!("line {i} tuple {j}: notes forbidden in PureLyric"));
                }
            }
            EntryKind::PureMelody => {
                if tuple.word.is_some() {
                    out.push(format!("line {i} tuple {j}: word forbidden in PureMelody"));
                }
                if tuple.notes.len() != 1 {
                    out.push(format!(
                        "line {i} tuple {j}: expected exactly one note, got {}",
                        tuple.notes.len()
                    ));
                }
            }
            EntryKind::Paired => {
                if tuple.word.is_none() {
                    out.push(format!("line {i} tuple {j}: missing word"));
                }
                if tuple.notes.is_empty() {
                    out.push(format!("line {i} tuple {j}: missing notes"));
                }
            }
        }
        if let Some(word) = &tuple.word {
            if word.is_empty() {
                out.push(format!("line {i} tuple {j}: empty word"));
            }
            if let Some(c) = word.chars().find(|&c| reserved_word_char(c)) {
                out.push(format!("line {i} tuple {j}: word contains reserved character {c:?}"));
            }
        }
        for note in &tuple.notes {
            if note.duration_bin >= 512 {
                out.push(format!(
                    "line {i} tuple {j}: duration bin {} out of range",
                    note.duration_bin
                ));
            }
            if note.rest_bin >= 512 {
                out.push(format!("line {i} tuple {j}: rest bin {} out of range", note.rest_bin));
            }
        }
    }

    /// Shifts every pitch by `semitones`, leaving durations, rests, words,
    /// and line structure untouched.
    pub fn transpose(&self, semitones: i32) -> Result<SongEntry, SongError> {
        if self.kind == EntryKind::PureLyric {
            return Err(SongError::KindMismatch {
                expected: EntryKind::PureMelody,
                also: EntryKind::Paired,
                got: self.kind,
            });
        }
        let mut out = self.clone();
        for line in &mut out.lines {
            for tuple in line {
                for note in &mut tuple.notes {
                    let midi = i32::from(note.pitch.midi()) + semitones;
                    if midi < 0 || midi >= PITCH_TOKENS as i32 {
                        return Err(SongError::OutOfRange { midi, semitones });
                    }
                    note.pitch = PitchToken::from_midi(midi as u8)
                        .expect("midi checked against vocabulary range");
                }
            }
        }
        Ok(out)
    }

    /// The words of a paired entry as a pure-lyric entry.
    pub fn lyric_projection(&self) -> SongEntry {
        let lines = self
            .lines
            .iter()
            .map(|line| {
                line.iter()
                    .filter_map(|t| t.word.clone())
                    .map(SongTuple::lyric)
                    .collect()
            })
            .collect();
        SongEntry::new(EntryKind::PureLyric, self.language, lines)
    }

    /// The notes of a paired entry as a pure-melody entry, one tuple per
    /// note. Melody entries carry no words, so the language is Unspecified.
    pub fn melody_projection(&self) -> SongEntry {
        let lines = self
            .lines
            .iter()
            .map(|line| {
                line.iter()
                    .flat_map(|t| t.notes.iter().copied())
                    .map(SongTuple::melody)
                    .collect()
            })
            .collect();
        SongEntry::new(EntryKind::PureMelody, Language::Unspecified, lines)
    }
}

/// Turns absolute note events into melody triplets: the duration of note k
/// is `offset_k - onset_k`, the rest after it is `onset_{k+1} - offset_k`.
/// A segment ends when its last note ends, so the final rest is 0.
///
/// Events must be sorted by onset with `offset > onset`; overlapping notes
/// yield negative rests, which are preserved at this layer.
pub fn triplets_from_events(events: &[NoteEvent]) -> Result<Vec<MelodyTriplet>, SongError> {
    if events.is_empty() {
        return Err(SongError::EmptyInput);
    }
    let mut triplets = Vec::with_capacity(events.len());
    for (k, ev) in events.iter().enumerate() {
        let rest = match events.get(k + 1) {
            Some(next) => next.onset - ev.offset,
            None => 0.0,
        };
        triplets.push(MelodyTriplet {
            pitch: ev.pitch,
            note_duration: ev.offset - ev.onset,
            rest_duration: rest,
        });
    }
    Ok(triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::PitchToken;

    fn note(bin_dur: u16, bin_rest: u16, midi: u8) -> QuantizedNote {
        QuantizedNote {
            pitch: PitchToken::from_midi(midi).unwrap(),
            duration_bin: bin_dur,
            rest_bin: bin_rest,
        }
    }

    fn paired_entry() -> SongEntry {
        SongEntry::new(
            EntryKind::Paired,
            Language::English,
            vec![vec![
                SongTuple::paired("my", vec![note(169, 0, 60)]),
                SongTuple::paired("heart", vec![note(233, 0, 62), note(169, 0, 64)]),
            ]],
        )
    }

    #[test]
    fn well_formed_entry_validates_clean() {
        assert!(paired_entry().validate().is_empty());
    }

    #[test]
    fn lyric_entry_rejects_notes() {
        let entry = SongEntry::new(
            EntryKind::PureLyric,
            Language::English,
            vec![vec![
                SongTuple::lyric("my"),
                SongTuple::lyric("heart"),
                SongTuple { word: Some("sings".into()), notes: vec![note(1, 2, 60)] },
            ]],
        );
        assert_eq!(entry.validate(), vec!["line 0 tuple 2: notes forbidden in PureLyric"]);
    }

    #[test]
    fn empty_line_is_flagged() {
        let entry = SongEntry::new(
            EntryKind::PureLyric,
            Language::English,
            vec![vec![SongTuple::lyric("hey")], vec![]],
        );
        assert_eq!(entry.validate(), vec!["line 1: empty"]);
    }

    #[test]
    fn language_must_match_content() {
        let mut entry = paired_entry();
        entry.language = Language::Chinese;
        assert_eq!(entry.validate().len(), 1);
        entry.language = Language::English;
        assert!(entry.validate().is_empty());
    }

    #[test]
    fn transpose_zero_is_identity() {
        let entry = paired_entry();
        assert_eq!(entry.transpose(0).unwrap(), entry);
    }

    #[test]
    fn transpose_moves_middle_c_up_a_third() {
        let entry = SongEntry::new(
            EntryKind::PureMelody,
            Language::Unspecified,
            vec![vec![SongTuple::melody(note(169, 0, 60))]],
        );
        let shifted = entry.transpose(4).unwrap();
        assert_eq!(shifted.lines[0][0].notes[0].pitch.midi(), 64);
        assert_eq!(shifted.lines[0][0].notes[0].duration_bin, 169);
        assert_eq!(shifted.lines[0][0].notes[0].rest_bin, 0);
    }

    #[test]
    fn transpose_off_the_top_of_the_vocabulary_fails() {
        let entry = SongEntry::new(
            EntryKind::PureMelody,
            Language::Unspecified,
            vec![vec![SongTuple::melody(note(1, 1, 119))]],
        );
        assert_eq!(
            entry.transpose(1),
            Err(SongError::OutOfRange { midi: 120, semitones: 1 })
        );
    }

    #[test]
    fn transpose_rejects_lyric_entries() {
        let entry = SongEntry::new(
            EntryKind::PureLyric,
            Language::English,
            vec![vec![SongTuple::lyric("la")]],
        );
        assert!(matches!(entry.transpose(1), Err(SongError::KindMismatch { .. })));
    }

    #[test]
    fn triplets_follow_the_duration_and_rest_formulas() {
        let events = [
            NoteEvent { pitch: 60, onset: 0.0, offset: 1.0 },
            NoteEvent { pitch: 62, onset: 1.5, offset: 2.0 },
        ];
        let triplets = triplets_from_events(&events).unwrap();
        assert_eq!(
            triplets,
            vec![
                MelodyTriplet { pitch: 60, note_duration: 1.0, rest_duration: 0.5 },
                MelodyTriplet { pitch: 62, note_duration: 0.5, rest_duration: 0.0 },
            ]
        );
    }

    #[test]
    fn overlapping_events_yield_negative_rest() {
        let events = [
            NoteEvent { pitch: 60, onset: 0.0, offset: 1.0 },
            NoteEvent { pitch: 62, onset: 0.8, offset: 1.2 },
        ];
        let triplets = triplets_from_events(&events).unwrap();
        assert!((triplets[0].rest_duration - -0.2).abs() < 1e-12);
        assert!((triplets[1].note_duration - 0.4).abs() < 1e-12);
        assert_eq!(triplets[1].rest_duration, 0.0);
    }

    #[test]
    fn single_note_gets_terminal_rest_zero() {
        let events = [NoteEvent { pitch: 70, onset: 2.0, offset: 2.5 }];
        let triplets = triplets_from_events(&events).unwrap();
        assert_eq!(triplets, vec![MelodyTriplet { pitch: 70, note_duration: 0.5, rest_duration: 0.0 }]);
    }

    #[test]
    fn empty_events_are_rejected() {
        assert_eq!(triplets_from_events(&[]), Err(SongError::EmptyInput));
    }

    #[test]
    fn language_inference() {
        assert_eq!(infer_language(["my", "heart"]), Language::English);
        assert_eq!(infer_language(["我", "的"]), Language::Chinese);
        assert_eq!(infer_language([]), Language::Unspecified);
        assert_eq!(infer_language(["love", "爱"]), Language::Chinese);
    }
}
