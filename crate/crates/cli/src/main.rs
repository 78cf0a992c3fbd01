//! Batch command-line front end: every pipeline stage reads and writes
//! files (JSON-lines wherever records stream), all randomness flows from
//! `--seed`, and reruns with identical inputs are byte-identical.
//!
//! Exit codes: 0 success, 1 data errors (failing records are logged to
//! stderr and skipped), 2 usage errors.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use songkit::align::{
    align_words_to_notes, build_paired_entry, clean_lyrics, parse_lrc, slice_segments, Segment,
};
use songkit::dataset::{
    attribute_histograms, augment_melody, chunk_song, corpus_stats, mix_corpora, render_qa,
    PretrainSample, QaParams, SftTask, TemplateSet,
};
use songkit::metrics::{cosine_similarity, evaluate_melody, rouge2, MelodyEvalPair};
use songkit::midi::{extract, ExtractionReport};
use songkit::song::{EntryKind, Language, MelodyTriplet, SongEntry, TimedInterval};
use songkit::text;
use songkit::vocab::VocabTable;
use songkit::CodecConfig;

#[derive(Parser)]
#[command(name = "songkit", version, about = "Symbolic song data pipeline")]
struct Cli {
    /// Seed for every randomized stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for per-file/per-record stages; output order is
    /// always input order.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LangArg {
    En,
    Zh,
}

impl From<LangArg> for Language {
    fn from(l: LangArg) -> Language {
        match l {
            LangArg::En => Language::English,
            LangArg::Zh => Language::Chinese,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LangAutoArg {
    Auto,
    En,
    Zh,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    L2m,
    M2l,
    Cont,
    T2s,
}

impl From<TaskArg> for SftTask {
    fn from(t: TaskArg) -> SftTask {
        match t {
            TaskArg::L2m => SftTask::LyricToMelody,
            TaskArg::M2l => SftTask::MelodyToLyric,
            TaskArg::Cont => SftTask::Continuation,
            TaskArg::T2s => SftTask::TextToSong,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Extract melody triplets from Standard MIDI Files.
    ExtractMidi {
        /// Input .mid files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output JSON-lines file: {"source", "triplets"} per song.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON-lines extraction reports, one per input.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Encode a duration in seconds to its bin index.
    EncodeDuration {
        #[arg(allow_negative_numbers = true)]
        seconds: f64,
    },
    /// Decode a bin index back to seconds.
    DecodeDuration { bin: u16 },
    /// Token vocabulary operations.
    Vocab {
        #[command(subcommand)]
        command: VocabCommand,
    },
    /// Render a JSON song entry as tuple text.
    Serialize {
        /// JSON entry file (stdin when omitted).
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a tuple text document into a JSON song entry.
    Parse {
        /// Tuple text file (stdin when omitted).
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Clean raw lyric text into plain lines.
    CleanLyrics {
        #[arg(long)]
        lang: LangArg,
        /// Raw lyric text (stdin when omitted).
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slice LRC-timestamped lyrics into roughly 10-second segments.
    Slice {
        #[arg(long, default_value_t = 10.0)]
        target_seconds: f64,
        /// LRC file (stdin when omitted).
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Align timed words to timed notes and emit a paired tuple text
    /// document plus a JSON alignment sidecar.
    Align {
        /// JSON-lines of {"label","onset","offset"[,"line"]} word intervals.
        #[arg(long)]
        words: PathBuf,
        /// JSON-lines of {"label","onset","offset"} note intervals.
        #[arg(long)]
        notes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write {word_index: [note_start, note_end]} (inclusive).
        #[arg(long)]
        sidecar: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = LangAutoArg::Auto)]
        lang: LangAutoArg,
    },
    /// Chunk, augment, and mix the three corpora into a pretraining shard.
    BuildPretrain {
        /// Pure-lyric corpus, JSON-lines of song entries.
        #[arg(long)]
        lyrics: PathBuf,
        /// Pure-melody corpus, JSON-lines of song entries.
        #[arg(long)]
        melody: PathBuf,
        /// Paired corpus, JSON-lines of song entries.
        #[arg(long)]
        paired: PathBuf,
        /// Mixing ratio between the three corpora.
        #[arg(long, default_value = "1:1:1")]
        ratio: String,
        /// Output shard: tuple text documents separated by blank lines.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render instruction QA pairs from a paired corpus.
    BuildSft {
        #[arg(long, value_enum)]
        task: TaskArg,
        /// Paired corpus, JSON-lines of song entries.
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continuation: how many trailing lines the answer should hold.
        #[arg(long, default_value_t = 2)]
        extend_lines: usize,
        /// Text-to-song: file of song summaries, line-paired with the input.
        #[arg(long)]
        summaries: Option<PathBuf>,
    },
    /// Score generated songs against references.
    Evaluate {
        /// Generated side, JSON-lines (entries or {"triplets","lyrics"}).
        #[arg(long)]
        gen: PathBuf,
        /// Reference side, same format, line-paired with --gen.
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Embeddings for the generated lyrics: one line of
        /// comma-separated floats per song.
        #[arg(long)]
        gen_emb: Option<PathBuf>,
        /// Embeddings for the reference lyrics.
        #[arg(long)]
        ref_emb: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Corpus statistics per language plus totals.
    Stats {
        /// Corpus, JSON-lines of song entries (stdin when omitted).
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attribute histograms over a paired corpus.
    Histograms {
        /// Paired corpus, JSON-lines of song entries (stdin when omitted).
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum VocabCommand {
    /// Write the 632-token vocabulary as TSV: token_text<TAB>token_id.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => {}
        Ok(failures) => {
            eprintln!("{failures} record(s) failed; see log above");
            std::process::exit(1);
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<usize> {
    if cli.jobs == 0 {
        usage("--jobs must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .context("building worker pool")?;
    let seed = cli.seed;
    match cli.command {
        Command::ExtractMidi { inputs, out, report } => cmd_extract_midi(&inputs, &out, report.as_deref()),
        Command::EncodeDuration { seconds } => {
            let bin = CodecConfig::default().encode(seconds)?;
            println!("{bin}");
            Ok(0)
        }
        Command::DecodeDuration { bin } => {
            let x = CodecConfig::default().decode(bin)?;
            println!("{x}");
            Ok(0)
        }
        Command::Vocab { command: VocabCommand::Export { out } } => {
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            VocabTable::new().export(BufWriter::new(file))?;
            Ok(0)
        }
        Command::Serialize { input, out } => cmd_serialize(input.as_deref(), out.as_deref()),
        Command::Parse { input, out } => cmd_parse(input.as_deref(), out.as_deref()),
        Command::CleanLyrics { lang, input, out } => {
            let raw = read_input(input.as_deref())?;
            let mut w = open_output(out.as_deref())?;
            for line in clean_lyrics(&raw, lang.into()) {
                writeln!(w, "{line}")?;
            }
            Ok(0)
        }
        Command::Slice { target_seconds, input, out } => {
            let raw = read_input(input.as_deref())?;
            let lines = parse_lrc(&raw)?;
            let mut w = open_output(out.as_deref())?;
            for segment in slice_segments(&lines, target_seconds) {
                writeln!(w, "{}", serde_json::to_string(&SegmentRecord::from(&segment))?)?;
            }
            Ok(0)
        }
        Command::Align { words, notes, out, sidecar, lang } => {
            cmd_align(&words, &notes, &out, sidecar.as_deref(), lang)
        }
        Command::BuildPretrain { lyrics, melody, paired, ratio, out } => {
            if ratio.split(':').collect::<Vec<_>>() != vec!["1", "1", "1"] {
                usage(&format!("unsupported --ratio {ratio:?}: only 1:1:1 is implemented"));
            }
            cmd_build_pretrain(&lyrics, &melody, &paired, &out, seed)
        }
        Command::BuildSft { task, input, out, extend_lines, summaries } => {
            cmd_build_sft(task.into(), &input, &out, extend_lines, summaries.as_deref())
        }
        Command::Evaluate { gen, reference, gen_emb, ref_emb, out } => {
            cmd_evaluate(&gen, &reference, gen_emb.as_deref(), ref_emb.as_deref(), &out)
        }
        Command::Stats { input, out } => {
            let (entries, failures) = read_corpus(input.as_deref())?;
            let report = corpus_stats(&entries.into_iter().map(|(_, e)| e).collect::<Vec<_>>());
            let mut w = open_output(out.as_deref())?;
            writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
            Ok(failures)
        }
        Command::Histograms { input, out } => cmd_histograms(input.as_deref(), out.as_deref()),
    }
}

fn usage(message: &str) -> ! {
    eprintln!("usage error: {message}");
    eprintln!("run `songkit --help` for the synopsis");
    std::process::exit(2);
}

fn read_input(path: Option<&Path>) -> Result<String> {
    let mut buf = String::new();
    match path {
        Some(p) => {
            File::open(p)
                .with_context(|| format!("opening {}", p.display()))?
                .read_to_string(&mut buf)
                .with_context(|| format!("reading {}", p.display()))?;
        }
        None => {
            io::stdin().read_to_string(&mut buf).context("reading stdin")?;
        }
    }
    Ok(buf)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Reads a JSON-lines file, logging and skipping undecodable lines.
/// Returns (0-based line number, record) pairs and the failure count.
fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(Vec<(usize, T)>, usize)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut records = Vec::new();
    let mut failures = 0usize;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(&line) {
            Ok(record) => records.push((idx, record)),
            Err(e) => {
                eprintln!("{}:{}: skipping record: {e}", path.display(), idx + 1);
                failures += 1;
            }
        }
    }
    Ok((records, failures))
}

fn read_corpus(path: Option<&Path>) -> Result<(Vec<(usize, SongEntry)>, usize)> {
    match path {
        Some(p) => read_jsonl::<SongEntry>(p),
        None => {
            let raw = read_input(None)?;
            let mut records = Vec::new();
            let mut failures = 0usize;
            for (idx, line) in raw.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<SongEntry>(line) {
                    Ok(e) => records.push((idx, e)),
                    Err(e) => {
                        eprintln!("stdin:{}: skipping record: {e}", idx + 1);
                        failures += 1;
                    }
                }
            }
            Ok((records, failures))
        }
    }
}

#[derive(Serialize)]
struct TripletRecord {
    source: String,
    triplets: Vec<MelodyTriplet>,
}

#[derive(Serialize)]
struct ReportRecord {
    source: String,
    #[serde(flatten)]
    report: ExtractionReport,
}

fn cmd_extract_midi(inputs: &[PathBuf], out: &Path, report_path: Option<&Path>) -> Result<usize> {
    use rayon::prelude::*;
    let results: Vec<Result<(Vec<MelodyTriplet>, ExtractionReport), String>> = inputs
        .par_iter()
        .map(|path| {
            let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            extract(&bytes).map_err(|e| format!("{}: {e}", path.display()))
        })
        .collect();

    let mut w = open_output(Some(out))?;
    let mut report_w = report_path.map(|p| open_output(Some(p))).transpose()?;
    let mut failures = 0usize;
    for (path, result) in inputs.iter().zip(results) {
        match result {
            Ok((triplets, report)) => {
                let record =
                    TripletRecord { source: path.display().to_string(), triplets };
                writeln!(w, "{}", serde_json::to_string(&record)?)?;
                if let Some(rw) = report_w.as_mut() {
                    let rr = ReportRecord { source: path.display().to_string(), report };
                    writeln!(rw, "{}", serde_json::to_string(&rr)?)?;
                }
            }
            Err(message) => {
                eprintln!("skipping {message}");
                failures += 1;
            }
        }
    }
    Ok(failures)
}

fn cmd_serialize(input: Option<&Path>, out: Option<&Path>) -> Result<usize> {
    let raw = read_input(input)?;
    let entry: SongEntry = serde_json::from_str(&raw).context("decoding JSON song entry")?;
    let text = text::serialize(&entry)?;
    let mut w = open_output(out)?;
    w.write_all(text.as_bytes())?;
    Ok(0)
}

fn cmd_parse(input: Option<&Path>, out: Option<&Path>) -> Result<usize> {
    let raw = read_input(input)?;
    let entry = text::parse(&raw)?;
    let mut w = open_output(out)?;
    writeln!(w, "{}", serde_json::to_string(&entry)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct SegmentRecord {
    start: f64,
    end: f64,
    lines: Vec<songkit::align::TimedLyricLine>,
}

impl From<&Segment> for SegmentRecord {
    fn from(s: &Segment) -> Self {
        Self { start: s.start(), end: s.end(), lines: s.lines.clone() }
    }
}

#[derive(Deserialize)]
struct WordRecord {
    label: String,
    onset: f64,
    offset: f64,
    #[serde(default)]
    line: Option<usize>,
}

fn cmd_align(
    words_path: &Path,
    notes_path: &Path,
    out: &Path,
    sidecar: Option<&Path>,
    lang: LangAutoArg,
) -> Result<usize> {
    let (word_records, wf) = read_jsonl::<WordRecord>(words_path)?;
    let (note_records, nf) = read_jsonl::<TimedInterval>(notes_path)?;
    if wf + nf > 0 {
        bail!("undecodable interval records in {} or {}", words_path.display(), notes_path.display());
    }
    let words: Vec<TimedInterval> = word_records
        .iter()
        .map(|(_, w)| TimedInterval { label: w.label.clone(), onset: w.onset, offset: w.offset })
        .collect();
    let notes: Vec<TimedInterval> = note_records.into_iter().map(|(_, n)| n).collect();

    // Consecutive words with the same `line` value form one song line.
    let mut words_per_line: Vec<usize> = Vec::new();
    let mut current_line: Option<usize> = None;
    for (_, w) in &word_records {
        let line = w.line.unwrap_or(0);
        if current_line == Some(line) {
            *words_per_line.last_mut().unwrap() += 1;
        } else {
            words_per_line.push(1);
            current_line = Some(line);
        }
    }

    let language = match lang {
        LangAutoArg::En => Language::English,
        LangAutoArg::Zh => Language::Chinese,
        LangAutoArg::Auto => {
            songkit::song::infer_language(words.iter().map(|w| w.label.as_str()))
        }
    };

    let alignment = align_words_to_notes(&words, &notes)?;
    let entry = build_paired_entry(
        &words,
        &notes,
        &alignment,
        language,
        &words_per_line,
        &CodecConfig::default(),
    )?;
    let doc = text::serialize(&entry)?;
    let mut w = open_output(Some(out))?;
    w.write_all(doc.as_bytes())?;

    if let Some(sidecar_path) = sidecar {
        let mut body = String::from("{");
        for (i, range) in alignment.pairs() {
            if i > 0 {
                body.push(',');
            }
            body.push_str(&format!("\"{i}\":[{},{}]", range.start, range.end));
        }
        body.push_str("}\n");
        let mut sw = open_output(Some(sidecar_path))?;
        sw.write_all(body.as_bytes())?;
    }
    Ok(0)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn song_seed(base: u64, corpus_tag: u64, song_index: usize) -> u64 {
    splitmix64(base ^ splitmix64(corpus_tag) ^ splitmix64(song_index as u64))
}

fn cmd_build_pretrain(
    lyrics: &Path,
    melody: &Path,
    paired: &Path,
    out: &Path,
    seed: u64,
) -> Result<usize> {
    let mut failures = 0usize;
    let mut load = |path: &Path, tag: u64, augment: bool| -> Result<Vec<PretrainSample>> {
        let (entries, f) = read_jsonl::<SongEntry>(path)?;
        failures += f;
        let mut samples = Vec::new();
        for (line_no, entry) in entries {
            let violations = entry.validate();
            if !violations.is_empty() {
                eprintln!(
                    "{}:{}: skipping invalid entry: {}",
                    path.display(),
                    line_no + 1,
                    violations.join("; ")
                );
                failures += 1;
                continue;
            }
            let source = format!("{}:{}", path.display(), line_no + 1);
            for chunk in chunk_song(&entry, &source, song_seed(seed, tag, line_no)) {
                if augment {
                    let (variants, _dropped) = augment_melody(&chunk);
                    samples.extend(variants);
                } else {
                    samples.push(chunk);
                }
            }
        }
        Ok(samples)
    };

    let lyric_samples = load(lyrics, 1, false)?;
    let melody_samples = load(melody, 2, true)?;
    let paired_samples = load(paired, 3, true)?;
    let stream = mix_corpora(&lyric_samples, &melody_samples, &paired_samples, splitmix64(seed))?;

    let mut w = open_output(Some(out))?;
    for (i, sample) in stream.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        w.write_all(text::serialize(&sample.entry)?.as_bytes())?;
    }
    Ok(failures)
}

fn cmd_build_sft(
    task: SftTask,
    input: &Path,
    out: &Path,
    extend_lines: usize,
    summaries: Option<&Path>,
) -> Result<usize> {
    let (entries, mut failures) = read_jsonl::<SongEntry>(input)?;
    let summary_lines: Option<Vec<String>> = match summaries {
        Some(p) => Some(read_input(Some(p))?.lines().map(str::to_string).collect()),
        None => None,
    };
    if task == SftTask::TextToSong && summary_lines.is_none() {
        usage("--task t2s needs --summaries");
    }
    let templates = TemplateSet::default();
    let mut w = open_output(Some(out))?;
    for (line_no, entry) in entries {
        let params = QaParams {
            extend_lines: Some(extend_lines),
            summary: summary_lines
                .as_ref()
                .and_then(|lines| lines.get(line_no).cloned()),
        };
        match render_qa(task, &entry, &params, &templates) {
            Ok(qa) => writeln!(w, "{}", serde_json::to_string(&qa)?)?,
            Err(e) => {
                eprintln!("{}:{}: skipping record: {e}", input.display(), line_no + 1);
                failures += 1;
            }
        }
    }
    Ok(failures)
}

/// One side of an evaluation record: either a full song entry or a raw
/// record carrying triplets and/or lyrics.
#[derive(Deserialize)]
#[serde(untagged)]
enum EvalInput {
    Entry(SongEntry),
    Raw {
        #[serde(default)]
        triplets: Option<Vec<MelodyTriplet>>,
        #[serde(default)]
        lyrics: Option<String>,
    },
}

struct EvalSide {
    triplets: Vec<MelodyTriplet>,
    lyrics: Option<String>,
}

fn eval_side(input: EvalInput, codec: &CodecConfig) -> Result<EvalSide> {
    Ok(match input {
        EvalInput::Entry(entry) => {
            let mut triplets = Vec::new();
            for tuple in entry.lines.iter().flatten() {
                for note in &tuple.notes {
                    triplets.push(MelodyTriplet {
                        pitch: note.pitch.midi(),
                        note_duration: codec.decode(note.duration_bin)?,
                        rest_duration: codec.decode(note.rest_bin)?,
                    });
                }
            }
            let joiner = if entry.language == Language::Chinese { "" } else { " " };
            let lyrics = (entry.kind != EntryKind::PureMelody).then(|| {
                entry
                    .lines
                    .iter()
                    .map(|line| {
                        line.iter()
                            .filter_map(|t| t.word.as_deref())
                            .collect::<Vec<_>>()
                            .join(joiner)
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            });
            EvalSide { triplets, lyrics }
        }
        EvalInput::Raw { triplets, lyrics } => {
            if triplets.is_none() && lyrics.is_none() {
                bail!("record has neither triplets nor lyrics");
            }
            EvalSide { triplets: triplets.unwrap_or_default(), lyrics }
        }
    })
}

#[derive(Serialize)]
struct SongScores {
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    md: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rouge2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cosine: Option<f64>,
}

#[derive(Serialize)]
struct EvalReport {
    pd: Option<f64>,
    dd: Option<f64>,
    md: Option<f64>,
    rouge2: Option<f64>,
    cosine: Option<f64>,
    songs: Vec<SongScores>,
}

fn read_embeddings(path: &Path) -> Result<Vec<Vec<f64>>> {
    let raw = read_input(Some(path))?;
    let mut out = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vector: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}:{}: bad embedding", path.display(), idx + 1))?;
        out.push(vector);
    }
    Ok(out)
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let collected: Vec<f64> = values.collect();
    if collected.is_empty() {
        None
    } else {
        Some(collected.iter().sum::<f64>() / collected.len() as f64)
    }
}

fn cmd_evaluate(
    gen_path: &Path,
    ref_path: &Path,
    gen_emb: Option<&Path>,
    ref_emb: Option<&Path>,
    out: &Path,
) -> Result<usize> {
    use rayon::prelude::*;
    if gen_emb.is_some() != ref_emb.is_some() {
        usage("--gen-emb and --ref-emb must be given together");
    }
    let (gen_records, gf) = read_jsonl::<EvalInput>(gen_path)?;
    let (ref_records, rf) = read_jsonl::<EvalInput>(ref_path)?;
    if gf + rf > 0 {
        bail!("undecodable records in evaluation inputs");
    }
    if gen_records.len() != ref_records.len() {
        bail!(
            "gen has {} records, ref has {}; they must pair by line",
            gen_records.len(),
            ref_records.len()
        );
    }
    let embeddings = match (gen_emb, ref_emb) {
        (Some(g), Some(r)) => {
            let (ge, re) = (read_embeddings(g)?, read_embeddings(r)?);
            if ge.len() != gen_records.len() || re.len() != ref_records.len() {
                bail!("embedding files must pair line-by-line with the song records");
            }
            Some((ge, re))
        }
        _ => None,
    };

    let codec = CodecConfig::default();
    let sides: Vec<Result<(EvalSide, EvalSide)>> = gen_records
        .into_iter()
        .zip(ref_records)
        .map(|((_, g), (_, r))| Ok((eval_side(g, &codec)?, eval_side(r, &codec)?)))
        .collect();

    let mut failures = 0usize;
    let mut pairs: Vec<(usize, EvalSide, EvalSide)> = Vec::new();
    for (i, side) in sides.into_iter().enumerate() {
        match side {
            Ok((g, r)) => pairs.push((i, g, r)),
            Err(e) => {
                eprintln!("song {i}: skipping: {e}");
                failures += 1;
            }
        }
    }

    let songs: Vec<SongScores> = pairs
        .par_iter()
        .map(|(index, g, r)| {
            let melody = MelodyEvalPair::new(g.triplets.clone(), r.triplets.clone())
                .ok()
                .map(|pair| evaluate_melody(&pair));
            let rouge = match (&g.lyrics, &r.lyrics) {
                (Some(c), Some(reference)) => {
                    Some(rouge2(c, reference, Language::Unspecified))
                }
                _ => None,
            };
            let cosine = embeddings.as_ref().and_then(|(ge, re)| {
                cosine_similarity(&ge[*index], &re[*index]).ok()
            });
            SongScores {
                index: *index,
                pd: melody.map(|m| m.pd),
                dd: melody.map(|m| m.dd),
                md: melody.map(|m| m.md),
                rouge2: rouge,
                cosine,
            }
        })
        .collect();

    let report = EvalReport {
        pd: mean_of(songs.iter().filter_map(|s| s.pd)),
        dd: mean_of(songs.iter().filter_map(|s| s.dd)),
        md: mean_of(songs.iter().filter_map(|s| s.md)),
        rouge2: mean_of(songs.iter().filter_map(|s| s.rouge2)),
        cosine: mean_of(songs.iter().filter_map(|s| s.cosine)),
        songs,
    };
    let mut w = open_output(Some(out))?;
    writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(failures)
}

fn cmd_histograms(input: Option<&Path>, out: Option<&Path>) -> Result<usize> {
    let (entries, failures) = read_corpus(input)?;
    let codec = CodecConfig::default();
    let mut word_notes: Vec<Vec<MelodyTriplet>> = Vec::new();
    for (_, entry) in &entries {
        for tuple in entry.lines.iter().flatten() {
            let mut notes = Vec::with_capacity(tuple.notes.len());
            for note in &tuple.notes {
                notes.push(MelodyTriplet {
                    pitch: note.pitch.midi(),
                    note_duration: codec.decode(note.duration_bin)?,
                    rest_duration: codec.decode(note.rest_bin)?,
                });
            }
            if !notes.is_empty() {
                word_notes.push(notes);
            }
        }
    }
    let hist = attribute_histograms(word_notes.iter().map(|v| v.as_slice()));
    let mut w = open_output(out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&hist)?)?;
    Ok(failures)
}
