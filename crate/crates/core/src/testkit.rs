//! Seeded random generators for domain values plus brute-force oracles,
//! compiled only for test suites (feature `testkit`). Everything here is
//! deterministic given the caller's RNG and independent of the code paths
//! it is used to check.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::align::{interval_iou, Alignment, NoteRange};
use crate::song::{
    EntryKind, Language, MelodyTriplet, QuantizedNote, SongEntry, SongTuple, TimedInterval,
};
use crate::vocab::PitchToken;

const CHINESE_CHARS: [&str; 16] = [
    "我", "你", "爱", "的", "心", "天", "日", "月", "歌", "声", "风", "花", "雪", "夜", "梦", "光",
];

pub fn random_english_word(rng: &mut impl Rng) -> String {
    let len = rng.gen_range(1..=8);
    (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
}

pub fn random_word(rng: &mut impl Rng, language: Language) -> String {
    match language {
        Language::Chinese => CHINESE_CHARS[rng.gen_range(0..CHINESE_CHARS.len())].to_string(),
        _ => random_english_word(rng),
    }
}

fn random_note(rng: &mut impl Rng, pitch_lo: u8, pitch_hi: u8) -> QuantizedNote {
    QuantizedNote {
        pitch: PitchToken::from_midi(rng.gen_range(pitch_lo..=pitch_hi)).unwrap(),
        duration_bin: rng.gen_range(0..512),
        rest_bin: rng.gen_range(0..512),
    }
}

/// A random valid entry of the given kind with pitches restricted to
/// [pitch_lo, pitch_hi]. Melody entries ignore `language` (they carry no
/// words, so their language is Unspecified by the content rule).
pub fn random_entry_in_register(
    rng: &mut impl Rng,
    kind: EntryKind,
    language: Language,
    pitch_lo: u8,
    pitch_hi: u8,
) -> SongEntry {
    let language = match kind {
        EntryKind::PureMelody => Language::Unspecified,
        _ => language,
    };
    let line_count = rng.gen_range(1..=6);
    let mut lines = Vec::with_capacity(line_count);
    let mut has_chinese = false;
    for _ in 0..line_count {
        let tuple_count = rng.gen_range(1..=8);
        let mut line = Vec::with_capacity(tuple_count);
        for _ in 0..tuple_count {
            let tuple = match kind {
                EntryKind::PureLyric => SongTuple::lyric(random_word(rng, language)),
                EntryKind::PureMelody => SongTuple::melody(random_note(rng, pitch_lo, pitch_hi)),
                EntryKind::Paired => {
                    let notes = (0..rng.gen_range(1..=3))
                        .map(|_| random_note(rng, pitch_lo, pitch_hi))
                        .collect();
                    SongTuple::paired(random_word(rng, language), notes)
                }
            };
            if let Some(w) = &tuple.word {
                has_chinese |= w.chars().any(crate::song::is_cjk);
            }
            line.push(tuple);
        }
        lines.push(line);
    }
    // Chinese draws come from a fixed CJK set, so the tag already matches;
    // this only guards the (impossible) all-ASCII draw.
    let language = if language == Language::Chinese && !has_chinese {
        Language::English
    } else {
        language
    };
    SongEntry::new(kind, language, lines)
}

pub fn random_entry(rng: &mut impl Rng, kind: EntryKind, language: Language) -> SongEntry {
    random_entry_in_register(rng, kind, language, 0, 119)
}

/// A random valid entry of any kind and language.
pub fn random_any_entry(rng: &mut impl Rng) -> SongEntry {
    let kind = *[EntryKind::PureLyric, EntryKind::PureMelody, EntryKind::Paired]
        .choose(rng)
        .unwrap();
    let language = if rng.gen_bool(0.5) { Language::English } else { Language::Chinese };
    random_entry_in_register(rng, kind, language, 0, 119)
}

/// A random paired song with a line count drawn from `lines`, mid-register
/// so every augmentation shift stays inside the vocabulary.
pub fn random_paired_song(rng: &mut impl Rng, lines: std::ops::Range<usize>) -> SongEntry {
    let count = rng.gen_range(lines);
    let lines = (0..count)
        .map(|_| {
            (0..rng.gen_range(2..=5))
                .map(|_| {
                    let notes = (0..rng.gen_range(1..=3))
                        .map(|_| random_note(rng, 40, 90))
                        .collect();
                    SongTuple::paired(random_english_word(rng), notes)
                })
                .collect()
        })
        .collect();
    SongEntry::new(EntryKind::Paired, Language::English, lines)
}

/// Random melody triplets with real-valued timing, for metric tests.
pub fn random_triplets(
    rng: &mut impl Rng,
    len: std::ops::Range<usize>,
    pitch_lo: u8,
    pitch_hi: u8,
) -> Vec<MelodyTriplet> {
    let len = rng.gen_range(len);
    (0..len)
        .map(|_| MelodyTriplet {
            pitch: rng.gen_range(pitch_lo..=pitch_hi),
            note_duration: rng.gen_range(0.05..2.0),
            rest_duration: if rng.gen_bool(0.2) { rng.gen_range(-0.2..0.0) } else { rng.gen_range(0.0..1.0) },
        })
        .collect()
}

/// Random melody triplets on the 480-ticks-per-second grid used when MIDI
/// files are synthesized at 60 bpm, so extraction can reproduce them
/// exactly. Pitches are all distinct (same-pitch overlapping note-on pairs
/// are ambiguous in MIDI itself); rests go negative in about a fifth of the
/// gaps, with onsets kept strictly increasing. The final rest is 0.
pub fn random_grid_triplets(rng: &mut impl Rng, len: usize) -> Vec<MelodyTriplet> {
    assert!(len <= 100, "pitch pool has 100 values");
    let mut pitches: Vec<u8> = (10..110).collect();
    pitches.shuffle(rng);
    let ticks = |t: i64| t as f64 / 480.0;
    let mut out = Vec::with_capacity(len);
    for (i, &pitch) in pitches[..len].iter().enumerate() {
        let nd: i64 = rng.gen_range(1..=2880); // up to 6 s
        let rd: i64 = if i + 1 == len {
            0
        } else if rng.gen_bool(0.2) {
            rng.gen_range((1 - nd).max(-144)..=0) // overlap, floor -0.3 s
        } else {
            rng.gen_range(0..=1440)
        };
        out.push(MelodyTriplet {
            pitch,
            note_duration: ticks(nd),
            rest_duration: ticks(rd),
        });
    }
    out
}

/// A random word/note alignment instance: `1..=max_words` words over
/// `words..=max_notes` notes, both sorted by onset.
pub fn random_alignment_instance(
    rng: &mut impl Rng,
    max_words: usize,
    max_notes: usize,
) -> (Vec<TimedInterval>, Vec<TimedInterval>) {
    let words = rng.gen_range(1..=max_words);
    let notes = rng.gen_range(words..=max_notes);
    let make = |rng: &mut dyn rand::RngCore, n: usize, label: &str| -> Vec<TimedInterval> {
        let mut t = 0.0;
        (0..n)
            .map(|i| {
                let onset = t + rng.gen_range(0.0..0.3);
                let offset = onset + rng.gen_range(0.1..1.2);
                t = offset;
                TimedInterval { label: format!("{label}{i}"), onset, offset }
            })
            .collect()
    };
    (make(rng, words, "w"), make(rng, notes, "n"))
}

/// Exhaustive minimum alignment cost over every monotonic segmentation of
/// the notes into one contiguous non-empty run per word. Exponential, only
/// for small instances; independent of the DP implementation.
pub fn brute_force_min_cost(words: &[TimedInterval], notes: &[TimedInterval]) -> f64 {
    fn recurse(words: &[TimedInterval], notes: &[TimedInterval], wi: usize, start: usize) -> f64 {
        let remaining_words = words.len() - wi;
        if remaining_words == 0 {
            return if start == notes.len() { 0.0 } else { f64::INFINITY };
        }
        let available = notes.len() - start;
        let max_take = available - (remaining_words - 1);
        let mut best = f64::INFINITY;
        let mut run_cost = 0.0;
        for take in 1..=max_take {
            run_cost += 1.0 - interval_iou(&words[wi], &notes[start + take - 1]);
            let rest = recurse(words, notes, wi + 1, start + take);
            best = best.min(run_cost + rest);
        }
        best
    }
    recurse(words, notes, 0, 0)
}

/// Checks that an alignment covers all notes exactly once, in order, with
/// at least one note per word.
pub fn alignment_is_total(alignment: &Alignment, words: usize, notes: usize) -> bool {
    if alignment.ranges.len() != words {
        return false;
    }
    let mut next = 0usize;
    for NoteRange { start, end } in alignment.ranges.iter().copied() {
        if start != next || end < start {
            return false;
        }
        next = end + 1;
    }
    next == notes
}
