//! Pretraining and SFT sample construction: chunk songs into 5-10 line
//! samples, augment melodies across nine semitone shifts, interleave the
//! three corpora 1:1:1, render instruction QA pairs, and compute corpus
//! statistics and attribute histograms.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::song::{infer_language, EntryKind, MelodyTriplet, SongEntry};
use crate::text::{serialize, SerializeError};

const CHUNK_MIN_LINES: usize = 5;
const CHUNK_MAX_LINES: usize = 10;
/// Pitch augmentation range in semitones, both directions.
const AUGMENT_SEMITONES: i32 = 4;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("the {0} corpus is empty")]
    EmptyCorpus(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Serialize(#[from] SerializeError),
}

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub line_offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkFlag {
    /// The source song had fewer than five lines and was kept whole.
    WholeSongUnderLength,
    /// A short remainder was merged in, pushing the chunk past ten lines.
    MergedOverLength,
}

/// One pretraining sample: a 5-10 line slice of a song (flagged when the
/// source forces an exception) at a given semitone shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainSample {
    pub entry: SongEntry,
    pub provenance: Provenance,
    pub shift: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<ChunkFlag>,
}

fn slice_entry(entry: &SongEntry, start: usize, len: usize) -> SongEntry {
    let lines: Vec<_> = entry.lines[start..start + len].to_vec();
    let language = infer_language(lines.iter().flatten().filter_map(|t| t.word.as_deref()));
    SongEntry::new(entry.kind, language, lines)
}

/// Breaks a song into consecutive chunks whose lengths are drawn uniformly
/// from [5, 10] with the seeded generator. A trailing remainder under five
/// lines is merged into the previous chunk (flagged if that pushes it past
/// ten); songs under five lines become one flagged whole-song sample.
/// Concatenating the chunks restores the song, and the same seed always
/// produces the same partition.
pub fn chunk_song(entry: &SongEntry, source: &str, seed: u64) -> Vec<PretrainSample> {
    let total = entry.lines.len();
    let provenance = |offset| Provenance { source: source.to_string(), line_offset: offset };
    if total < CHUNK_MIN_LINES {
        return vec![PretrainSample {
            entry: entry.clone(),
            provenance: provenance(0),
            shift: 0,
            flag: Some(ChunkFlag::WholeSongUnderLength),
        }];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bounds: Vec<(usize, usize)> = Vec::new();
    let mut offset = 0;
    while total - offset >= CHUNK_MIN_LINES {
        let want = rng.gen_range(CHUNK_MIN_LINES..=CHUNK_MAX_LINES);
        let len = want.min(total - offset);
        bounds.push((offset, len));
        offset += len;
    }
    if offset < total {
        bounds.last_mut().expect("at least one chunk").1 += total - offset;
    }
    bounds
        .into_iter()
        .map(|(start, len)| PretrainSample {
            entry: slice_entry(entry, start, len),
            provenance: provenance(start),
            shift: 0,
            flag: (len > CHUNK_MAX_LINES).then_some(ChunkFlag::MergedOverLength),
        })
        .collect()
}

/// Expands a melody-bearing sample into its nine semitone shifts (-4..=+4,
/// identity included). Shifts that would leave the pitch vocabulary are
/// dropped and reported back. Lyric samples pass through untouched.
pub fn augment_melody(sample: &PretrainSample) -> (Vec<PretrainSample>, Vec<i32>) {
    if sample.entry.kind == EntryKind::PureLyric {
        return (vec![sample.clone()], Vec::new());
    }
    let mut variants = Vec::with_capacity(9);
    let mut dropped = Vec::new();
    for shift in -AUGMENT_SEMITONES..=AUGMENT_SEMITONES {
        match sample.entry.transpose(shift) {
            Ok(entry) => variants.push(PretrainSample {
                entry,
                provenance: sample.provenance.clone(),
                shift,
                flag: sample.flag,
            }),
            Err(_) => dropped.push(shift),
        }
    }
    (variants, dropped)
}

/// Interleaves the three corpora so that every window of three consecutive
/// samples holds one of each kind: a seeded shuffle fixes the kind order
/// for the whole stream, each corpus is emitted in seeded-shuffle order,
/// and exhausted corpora recycle with a reshuffle until the largest corpus
/// has been consumed exactly once.
pub fn mix_corpora(
    lyric: &[PretrainSample],
    melody: &[PretrainSample],
    paired: &[PretrainSample],
    seed: u64,
) -> Result<Vec<PretrainSample>, DatasetError> {
    for (set, name) in [(lyric, "lyric"), (melody, "melody"), (paired, "paired")] {
        if set.is_empty() {
            return Err(DatasetError::EmptyCorpus(name));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = [lyric, melody, paired];
    let mut kind_order = [0usize, 1, 2];
    kind_order.shuffle(&mut rng);

    let rounds = sets.iter().map(|s| s.len()).max().unwrap();
    let mut queues: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut out = Vec::with_capacity(rounds * 3);
    for _ in 0..rounds {
        for &k in &kind_order {
            if queues[k].is_empty() {
                let mut indices: Vec<usize> = (0..sets[k].len()).collect();
                indices.shuffle(&mut rng);
                queues[k] = indices;
            }
            let idx = queues[k].pop().expect("refilled above");
            out.push(sets[k][idx].clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SftTask {
    LyricToMelody,
    MelodyToLyric,
    Continuation,
    TextToSong,
}

/// Task-specific inputs for QA rendering.
#[derive(Debug, Clone, Default)]
pub struct QaParams {
    /// Continuation: how many trailing lines the answer should hold.
    pub extend_lines: Option<usize>,
    /// TextToSong: the song description embedded in the prompt.
    pub summary: Option<String>,
}

/// Instruction templates for the four tasks. `{n}` in the continuation
/// template is replaced by the requested line count.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub lyric_to_melody: String,
    pub melody_to_lyric: String,
    pub continuation: String,
    pub text_to_song: String,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            lyric_to_melody: "Please generate an appropriate melody for the provided lyrics."
                .to_string(),
            melody_to_lyric: "Please write appropriate lyrics for the provided melody."
                .to_string(),
            continuation: "Please extend the given song with {n} additional lines.".to_string(),
            text_to_song: "Please compose a song based on the following description.".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub task: SftTask,
    pub prompt: String,
    pub answer: String,
}

/// Renders one instruction QA pair from a valid paired song. Prompts carry
/// the instruction plus the task's view of the song (lyric projection,
/// melody projection, leading lines, or the summary text); answers are
/// paired serializations that always parse back.
pub fn render_qa(
    task: SftTask,
    song: &SongEntry,
    params: &QaParams,
    templates: &TemplateSet,
) -> Result<QAPair, DatasetError> {
    if song.kind != EntryKind::Paired {
        return Err(DatasetError::InvalidParams(
            "QA rendering needs a paired (lyrics plus melody) song".to_string(),
        ));
    }
    let (prompt, answer) = match task {
        SftTask::LyricToMelody => {
            let prompt_body = serialize(&song.lyric_projection())?;
            (format!("{}\n{}", templates.lyric_to_melody, prompt_body), serialize(song)?)
        }
        SftTask::MelodyToLyric => {
            let prompt_body = serialize(&song.melody_projection())?;
            (format!("{}\n{}", templates.melody_to_lyric, prompt_body), serialize(song)?)
        }
        SftTask::Continuation => {
            let n = params.extend_lines.ok_or_else(|| {
                DatasetError::InvalidParams("continuation needs extend_lines".to_string())
            })?;
            if n < 1 || n >= song.lines.len() {
                return Err(DatasetError::InvalidParams(format!(
                    "cannot extend by {n} lines: song has {}",
                    song.lines.len()
                )));
            }
            let given = slice_entry(song, 0, song.lines.len() - n);
            let rest = slice_entry(song, song.lines.len() - n, n);
            let instruction = templates.continuation.replace("{n}", &n.to_string());
            (format!("{instruction}\n{}", serialize(&given)?), serialize(&rest)?)
        }
        SftTask::TextToSong => {
            let summary = params
                .summary
                .as_deref()
                .filter(|s| !s.trim().is_empty())
                .ok_or_else(|| {
                    DatasetError::InvalidParams("text-to-song needs a summary".to_string())
                })?;
            (format!("{}\n{summary}\n", templates.text_to_song), serialize(song)?)
        }
    };
    Ok(QAPair { task, prompt, answer })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusStats {
    pub songs: usize,
    pub lines_per_song: f64,
    pub words_per_line: f64,
    pub unique_words: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub per_language: BTreeMap<String, CorpusStats>,
    pub total: CorpusStats,
}

#[derive(Default)]
struct StatsAccumulator {
    songs: usize,
    lines: usize,
    words: usize,
    unique: HashSet<String>,
}

impl StatsAccumulator {
    fn add(&mut self, entry: &SongEntry) {
        self.songs += 1;
        self.lines += entry.lines.len();
        for word in entry.words() {
            self.words += 1;
            self.unique.insert(word.to_string());
        }
    }

    fn finish(&self) -> CorpusStats {
        CorpusStats {
            songs: self.songs,
            lines_per_song: if self.songs == 0 { 0.0 } else { self.lines as f64 / self.songs as f64 },
            words_per_line: if self.lines == 0 { 0.0 } else { self.words as f64 / self.lines as f64 },
            unique_words: self.unique.len(),
        }
    }
}

fn language_key(entry: &SongEntry) -> String {
    match entry.language {
        crate::song::Language::English => "english",
        crate::song::Language::Chinese => "chinese",
        crate::song::Language::Unspecified => "unspecified",
    }
    .to_string()
}

/// Per-language and total corpus statistics: song count, mean lines per
/// song, mean words per line, unique word count (Chinese word = character).
pub fn corpus_stats(entries: &[SongEntry]) -> StatsReport {
    let mut per: BTreeMap<String, StatsAccumulator> = BTreeMap::new();
    let mut total = StatsAccumulator::default();
    for entry in entries {
        per.entry(language_key(entry)).or_default().add(entry);
        total.add(entry);
    }
    StatsReport {
        per_language: per.iter().map(|(k, acc)| (k.clone(), acc.finish())).collect(),
        total: total.finish(),
    }
}

/// A fixed-bin histogram over seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationHistogram {
    pub min: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl DurationHistogram {
    fn new(min: f64, max: f64, bin_width: f64) -> Self {
        let bins = ((max - min) / bin_width).round() as usize;
        Self { min, bin_width, counts: vec![0; bins] }
    }

    fn add(&mut self, x: f64) {
        let idx = ((x - self.min) / self.bin_width).floor();
        let idx = (idx.max(0.0) as usize).min(self.counts.len() - 1);
        self.counts[idx] += 1;
    }
}

/// Attribute distributions over a paired corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeHistograms {
    /// One count per MIDI pitch 0..=119.
    pub pitch: Vec<u64>,
    /// Notes per word: index 0 holds 1-note words, ..., index 7 holds 8+.
    pub notes_per_word: Vec<u64>,
    /// Note durations in 0.1 s bins over [-0.3, 6].
    pub note_duration: DurationHistogram,
    /// Rest durations in 0.1 s bins over [-0.3, 6].
    pub rest_duration: DurationHistogram,
}

/// Computes attribute histograms from per-word note lists, durations in
/// seconds. Each item is the notes of a single word-tuple.
pub fn attribute_histograms<'a, I>(word_notes: I) -> AttributeHistograms
where
    I: IntoIterator<Item = &'a [MelodyTriplet]>,
{
    let mut hist = AttributeHistograms {
        pitch: vec![0; 120],
        notes_per_word: vec![0; 8],
        note_duration: DurationHistogram::new(-0.3, 6.0, 0.1),
        rest_duration: DurationHistogram::new(-0.3, 6.0, 0.1),
    };
    for notes in word_notes {
        if notes.is_empty() {
            continue;
        }
        hist.notes_per_word[notes.len().min(8) - 1] += 1;
        for t in notes {
            if usize::from(t.pitch) < hist.pitch.len() {
                hist.pitch[usize::from(t.pitch)] += 1;
            }
            hist.note_duration.add(t.note_duration);
            hist.rest_duration.add(t.rest_duration);
        }
    }
    hist
}
