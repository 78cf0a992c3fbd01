//! Python bindings: thin wrappers over the songkit library. Song entries
//! cross the boundary as JSON strings (the same schema the CLI corpora
//! use); melodies as (pitch, note_duration, rest_duration) tuples.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use songkit::align;
use songkit::dataset::{render_qa as render_qa_impl, QaParams, SftTask, TemplateSet};
use songkit::metrics;
use songkit::midi;
use songkit::song::{self, Language, MelodyTriplet, NoteEvent, SongEntry, TimedInterval};
use songkit::text;
use songkit::vocab::{PitchToken, VocabTable};
use songkit::CodecConfig;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn language_from(code: &str) -> PyResult<Language> {
    match code {
        "en" | "english" => Ok(Language::English),
        "zh" | "chinese" => Ok(Language::Chinese),
        "" | "auto" | "unspecified" => Ok(Language::Unspecified),
        other => Err(value_err(format!("unknown language {other:?} (use en, zh, or auto)"))),
    }
}

fn entry_from_json(entry_json: &str) -> PyResult<SongEntry> {
    serde_json::from_str(entry_json).map_err(value_err)
}

fn entry_to_json(entry: &SongEntry) -> PyResult<String> {
    serde_json::to_string(entry).map_err(value_err)
}

/// (pitch, note_duration, rest_duration), the Python-side melody triplet.
type Triplet = (u8, f64, f64);
/// (pitch, onset, offset), a note event with absolute times.
type Event = (u8, f64, f64);

fn triplets_from(tuples: Vec<Triplet>) -> Vec<MelodyTriplet> {
    tuples.into_iter().map(MelodyTriplet::from).collect()
}

fn triplets_into(triplets: Vec<MelodyTriplet>) -> Vec<Triplet> {
    triplets.into_iter().map(Triplet::from).collect()
}

fn intervals_from(items: Vec<(String, f64, f64)>) -> Vec<TimedInterval> {
    items
        .into_iter()
        .map(|(label, onset, offset)| TimedInterval { label, onset, offset })
        .collect()
}

/// Encode a duration in seconds to its bin index (values clip to the
/// codec range first).
#[pyfunction]
fn encode_duration(seconds: f64) -> PyResult<u16> {
    CodecConfig::default().encode(seconds).map_err(value_err)
}

/// Decode a bin index back to seconds.
#[pyfunction]
fn decode_duration(bin: u16) -> PyResult<f64> {
    CodecConfig::default().decode(bin).map_err(value_err)
}

/// Width in seconds of the given bin.
#[pyfunction]
fn bin_width_at(bin: u16) -> PyResult<f64> {
    CodecConfig::default().bin_width_at(bin).map_err(value_err)
}

/// MIDI number (0-119) to pitch token text, e.g. 60 -> "C4".
#[pyfunction]
fn midi_to_pitch_token(midi: u8) -> PyResult<String> {
    Ok(PitchToken::from_midi(midi).map_err(value_err)?.to_string())
}

/// Pitch token text back to its MIDI number.
#[pyfunction]
fn pitch_token_to_midi(token: &str) -> PyResult<u8> {
    Ok(token.parse::<PitchToken>().map_err(value_err)?.midi())
}

/// The full 632-token vocabulary as (token_text, token_id) pairs.
#[pyfunction]
fn vocab_entries() -> Vec<(String, u32)> {
    VocabTable::new().entries().to_vec()
}

/// Render a JSON song entry as tuple text.
#[pyfunction]
fn serialize_entry(entry_json: &str) -> PyResult<String> {
    text::serialize(&entry_from_json(entry_json)?).map_err(value_err)
}

/// Parse tuple text back into a JSON song entry.
#[pyfunction]
fn parse_entry(document: &str) -> PyResult<String> {
    entry_to_json(&text::parse(document).map_err(value_err)?)
}

/// Validate a JSON song entry; returns the list of violations (empty
/// means valid).
#[pyfunction]
fn validate_entry(entry_json: &str) -> PyResult<Vec<String>> {
    Ok(entry_from_json(entry_json)?.validate())
}

/// Shift every pitch of a JSON song entry by `semitones`.
#[pyfunction]
fn transpose_entry(entry_json: &str, semitones: i32) -> PyResult<String> {
    entry_to_json(&entry_from_json(entry_json)?.transpose(semitones).map_err(value_err)?)
}

/// Turn (pitch, onset, offset) note events into melody triplets.
#[pyfunction]
fn triplets_from_events(events: Vec<Event>) -> PyResult<Vec<Triplet>> {
    let events: Vec<NoteEvent> = events
        .into_iter()
        .map(|(pitch, onset, offset)| NoteEvent { pitch, onset, offset })
        .collect();
    Ok(triplets_into(song::triplets_from_events(&events).map_err(value_err)?))
}

/// Extract melody triplets from MIDI bytes; returns (triplets,
/// report_json).
#[pyfunction]
fn extract_midi(bytes: &[u8]) -> PyResult<(Vec<Triplet>, String)> {
    let (triplets, report) = midi::extract(bytes).map_err(value_err)?;
    Ok((triplets_into(triplets), serde_json::to_string(&report).map_err(value_err)?))
}

/// Build a single-track 60 bpm MIDI file from melody triplets.
#[pyfunction]
fn write_melody_midi<'py>(
    py: Python<'py>,
    triplets: Vec<Triplet>,
    track_name: &str,
) -> PyResult<Bound<'py, PyBytes>> {
    let bytes = midi::write_melody_midi(&triplets_from(triplets), track_name).map_err(value_err)?;
    Ok(PyBytes::new(py, &bytes))
}

/// Clean raw lyric text into plain lines ("en" or "zh").
#[pyfunction]
fn clean_lyrics(raw: &str, lang: &str) -> PyResult<Vec<String>> {
    Ok(align::clean_lyrics(raw, language_from(lang)?))
}

/// Align (label, onset, offset) words to notes; returns one
/// (word_index, note_start, note_end) triple per word, ends inclusive.
#[pyfunction]
fn align_words_to_notes(
    words: Vec<(String, f64, f64)>,
    notes: Vec<(String, f64, f64)>,
) -> PyResult<Vec<(usize, usize, usize)>> {
    let alignment = align::align_words_to_notes(&intervals_from(words), &intervals_from(notes))
        .map_err(value_err)?;
    Ok(alignment.pairs().map(|(w, r)| (w, r.start, r.end)).collect())
}

/// Align words to notes and quantize into a paired JSON song entry.
/// `words_per_line` groups the words into lines (empty = one line).
#[pyfunction]
#[pyo3(signature = (words, notes, lang = "auto", words_per_line = vec![]))]
fn build_paired_entry(
    words: Vec<(String, f64, f64)>,
    notes: Vec<(String, f64, f64)>,
    lang: &str,
    words_per_line: Vec<usize>,
) -> PyResult<String> {
    let words = intervals_from(words);
    let notes = intervals_from(notes);
    let language = match language_from(lang)? {
        Language::Unspecified => song::infer_language(words.iter().map(|w| w.label.as_str())),
        explicit => explicit,
    };
    let alignment = align::align_words_to_notes(&words, &notes).map_err(value_err)?;
    let entry = align::build_paired_entry(
        &words,
        &notes,
        &alignment,
        language,
        &words_per_line,
        &CodecConfig::default(),
    )
    .map_err(value_err)?;
    entry_to_json(&entry)
}

/// Calibrated melody scores for a generated/reference pair:
/// (pd, dd, md).
#[pyfunction]
fn evaluate_melody(
    generated: Vec<Triplet>,
    reference: Vec<Triplet>,
) -> PyResult<(f64, f64, f64)> {
    let pair = metrics::MelodyEvalPair::new(triplets_from(generated), triplets_from(reference))
        .map_err(value_err)?;
    let scores = metrics::evaluate_melody(&pair);
    Ok((scores.pd, scores.dd, scores.md))
}

/// Histogram-intersection similarity of two integer lists, in percent.
#[pyfunction]
fn distribution_similarity(a: Vec<i64>, b: Vec<i64>) -> f64 {
    metrics::distribution_similarity(&a, &b)
}

/// ROUGE-2 F1 between candidate and reference text.
#[pyfunction]
#[pyo3(signature = (candidate, reference, lang = "auto"))]
fn rouge2(candidate: &str, reference: &str, lang: &str) -> PyResult<f64> {
    Ok(metrics::rouge2(candidate, reference, language_from(lang)?))
}

/// Cosine similarity between two embedding vectors.
#[pyfunction]
fn cosine_similarity(u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
    metrics::cosine_similarity(&u, &v).map_err(value_err)
}

/// Render one instruction QA pair from a paired JSON song entry.
/// `task` is one of "l2m", "m2l", "cont", "t2s"; returns (prompt, answer).
#[pyfunction]
#[pyo3(signature = (task, entry_json, extend_lines = None, summary = None))]
fn render_qa(
    task: &str,
    entry_json: &str,
    extend_lines: Option<usize>,
    summary: Option<String>,
) -> PyResult<(String, String)> {
    let task = match task {
        "l2m" => SftTask::LyricToMelody,
        "m2l" => SftTask::MelodyToLyric,
        "cont" => SftTask::Continuation,
        "t2s" => SftTask::TextToSong,
        other => return Err(value_err(format!("unknown task {other:?}"))),
    };
    let qa = render_qa_impl(
        task,
        &entry_from_json(entry_json)?,
        &QaParams { extend_lines, summary },
        &TemplateSet::default(),
    )
    .map_err(value_err)?;
    Ok((qa.prompt, qa.answer))
}

#[pymodule]
fn songkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(encode_duration, m)?)?;
    m.add_function(wrap_pyfunction!(decode_duration, m)?)?;
    m.add_function(wrap_pyfunction!(bin_width_at, m)?)?;
    m.add_function(wrap_pyfunction!(midi_to_pitch_token, m)?)?;
    m.add_function(wrap_pyfunction!(pitch_token_to_midi, m)?)?;
    m.add_function(wrap_pyfunction!(vocab_entries, m)?)?;
    m.add_function(wrap_pyfunction!(serialize_entry, m)?)?;
    m.add_function(wrap_pyfunction!(parse_entry, m)?)?;
    m.add_function(wrap_pyfunction!(validate_entry, m)?)?;
    m.add_function(wrap_pyfunction!(transpose_entry, m)?)?;
    m.add_function(wrap_pyfunction!(triplets_from_events, m)?)?;
    m.add_function(wrap_pyfunction!(extract_midi, m)?)?;
    m.add_function(wrap_pyfunction!(write_melody_midi, m)?)?;
    m.add_function(wrap_pyfunction!(clean_lyrics, m)?)?;
    m.add_function(wrap_pyfunction!(align_words_to_notes, m)?)?;
    m.add_function(wrap_pyfunction!(build_paired_entry, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_melody, m)?)?;
    m.add_function(wrap_pyfunction!(distribution_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(rouge2, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(render_qa, m)?)?;
    Ok(())
}
