//! Symbolic song toolkit: a typed model for melodies and lyrics, the
//! LLM-facing tuple text format, a MIDI melody extractor, the paired-data
//! alignment pipeline, pretraining/SFT sample builders, and the objective
//! evaluation metrics used to compare generated songs against references.
//!
//! The crate is pure library code; the `songkit` binary wires these modules
//! into batch pipeline stages.

pub mod align;
pub mod codec;
pub mod dataset;
pub mod metrics;
pub mod midi;
pub mod song;
pub mod text;
pub mod vocab;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use codec::CodecConfig;
pub use song::{EntryKind, Language, MelodyTriplet, NoteEvent, SongEntry, SongTuple, TimedInterval};
pub use vocab::{PitchClass, PitchToken, VocabTable};
