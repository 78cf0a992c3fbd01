//! The extended token vocabulary: 512 duration-bin tokens followed by 120
//! pitch tokens (12 pitch classes across the 10 octaves covering MIDI 0-119,
//! with 60 = C4). Ids are dense and stable so the table can be handed to any
//! trainer verbatim.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of discrete duration bins (and duration tokens).
pub const DURATION_BINS: u16 = 512;
/// Number of pitch tokens: MIDI 0-119.
pub const PITCH_TOKENS: u16 = 120;
/// Total extended vocabulary size.
pub const VOCAB_SIZE: u16 = DURATION_BINS + PITCH_TOKENS;

#[derive(Debug, Error, PartialEq)]
pub enum VocabError {
    #[error("MIDI pitch {0} is outside the 120-token vocabulary [0, 119]")]
    PitchOutOfVocabulary(u8),
    #[error("octave {0} is outside [-1, 8]")]
    OctaveOutOfRange(i8),
    #[error("cannot parse {0:?} as a pitch token")]
    BadPitchName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PitchClass {
    C,
    CSharp,
    D,
    DSharp,
    E,
    F,
    FSharp,
    G,
    GSharp,
    A,
    ASharp,
    B,
}

impl PitchClass {
    pub const ALL: [PitchClass; 12] = [
        PitchClass::C,
        PitchClass::CSharp,
        PitchClass::D,
        PitchClass::DSharp,
        PitchClass::E,
        PitchClass::F,
        PitchClass::FSharp,
        PitchClass::G,
        PitchClass::GSharp,
        PitchClass::A,
        PitchClass::ASharp,
        PitchClass::B,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PitchClass::C => "C",
            PitchClass::CSharp => "C#",
            PitchClass::D => "D",
            PitchClass::DSharp => "D#",
            PitchClass::E => "E",
            PitchClass::F => "F",
            PitchClass::FSharp => "F#",
            PitchClass::G => "G",
            PitchClass::GSharp => "G#",
            PitchClass::A => "A",
            PitchClass::ASharp => "A#",
            PitchClass::B => "B",
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }
}

/// One of the 120 pitch vocabulary symbols, e.g. C4 for MIDI 60.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PitchToken {
    pitch_class: PitchClass,
    octave: i8,
}

impl PitchToken {
    pub fn new(pitch_class: PitchClass, octave: i8) -> Result<Self, VocabError> {
        if !(-1..=8).contains(&octave) {
            return Err(VocabError::OctaveOutOfRange(octave));
        }
        Ok(Self { pitch_class, octave })
    }

    /// MIDI number to pitch token. MIDI allows 0-127 but the vocabulary
    /// stops at 119 (B8); 120-127 are rejected rather than clamped so bad
    /// data cannot silently corrupt a melody.
    pub fn from_midi(midi: u8) -> Result<Self, VocabError> {
        if midi >= PITCH_TOKENS as u8 {
            return Err(VocabError::PitchOutOfVocabulary(midi));
        }
        Ok(Self {
            pitch_class: PitchClass::ALL[(midi % 12) as usize],
            octave: (midi / 12) as i8 - 1,
        })
    }

    pub fn midi(self) -> u8 {
        ((self.octave + 1) as u8) * 12 + self.pitch_class.index()
    }

    pub fn pitch_class(self) -> PitchClass {
        self.pitch_class
    }

    pub fn octave(self) -> i8 {
        self.octave
    }
}

impl fmt::Display for PitchToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.pitch_class.as_str(), self.octave)
    }
}

impl FromStr for PitchToken {
    type Err = VocabError;

    fn from_str(s: &str) -> Result<Self, VocabError> {
        let bad = || VocabError::BadPitchName(s.to_string());
        let bytes = s.as_bytes();
        if bytes.len() < 2 || !bytes[0].is_ascii_uppercase() {
            return Err(bad());
        }
        let class_len = if bytes[1] == b'#' { 2 } else { 1 };
        if bytes.len() < class_len + 1 {
            return Err(bad());
        }
        let (class_str, octave_str) = s.split_at(class_len);
        let pitch_class = PitchClass::ALL
            .iter()
            .copied()
            .find(|pc| pc.as_str() == class_str)
            .ok_or_else(bad)?;
        let octave: i8 = octave_str.parse().map_err(|_| bad())?;
        PitchToken::new(pitch_class, octave).map_err(|_| bad())
    }
}

impl From<PitchToken> for String {
    fn from(tok: PitchToken) -> String {
        tok.to_string()
    }
}

impl TryFrom<String> for PitchToken {
    type Error = VocabError;

    fn try_from(s: String) -> Result<Self, VocabError> {
        s.parse()
    }
}

/// Text form of a duration-bin token, zero-padded so lexicographic order is
/// numeric order.
pub fn duration_token_text(bin: u16) -> String {
    format!("\u{27E8}d_{bin:03}\u{27E9}")
}

/// Text form of a pitch token.
pub fn pitch_token_text(tok: PitchToken) -> String {
    format!("\u{27E8}{tok}\u{27E9}")
}

/// The full extended vocabulary with stable ids: duration bins 0-511 first,
/// then pitches ascending by MIDI number at ids 512-631.
#[derive(Debug, Clone)]
pub struct VocabTable {
    entries: Vec<(String, u32)>,
}

impl Default for VocabTable {
    fn default() -> Self {
        Self::new()
    }
}

impl VocabTable {
    pub fn new() -> Self {
        let mut entries = Vec::with_capacity(VOCAB_SIZE as usize);
        for bin in 0..DURATION_BINS {
            entries.push((duration_token_text(bin), u32::from(bin)));
        }
        for midi in 0..PITCH_TOKENS as u8 {
            let tok = PitchToken::from_midi(midi).expect("midi < 120");
            entries.push((pitch_token_text(tok), u32::from(DURATION_BINS) + u32::from(midi)));
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[(String, u32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id_of(&self, token_text: &str) -> Option<u32> {
        self.entries
            .iter()
            .find(|(text, _)| text == token_text)
            .map(|&(_, id)| id)
    }

    /// Writes the table as TSV, one `token_text<TAB>token_id` line per
    /// token, ordered by id. Output is byte-identical across runs.
    pub fn export(&self, mut w: impl Write) -> io::Result<()> {
        for (text, id) in &self.entries {
            writeln!(w, "{text}\t{id}")?;
        }
        Ok(())
    }
}
