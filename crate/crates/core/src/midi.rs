//! Standard MIDI File melody extraction: parse note events with tick to
//! seconds conversion from the file's tempo map, pick the melody/vocal
//! tracks, and emit melody triplets.

use std::collections::{BTreeMap, HashMap, VecDeque};

use midly::num::u28;
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};
use serde::Serialize;
use thiserror::Error;

use crate::song::{triplets_from_events, MelodyTriplet, NoteEvent, SongError};

/// MIDI channel 10 (0-based 9) is percussion by convention.
const PERCUSSION_CHANNEL: u8 = 9;
/// Ticks per quarter note used when synthesizing files.
const WRITE_TPQ: u16 = 480;
/// Microseconds per quarter at 60 bpm.
const WRITE_TEMPO_US: u32 = 1_000_000;

#[derive(Debug, Error)]
pub enum MidiError {
    #[error("malformed MIDI file: {reason}")]
    Malformed { reason: String },
    #[error("unsupported MIDI file: {0}")]
    Unsupported(String),
    #[error("no selectable tracks: {0}")]
    NoTracks(String),
    #[error("selected tracks contain no usable notes")]
    EmptyInput,
}

impl From<SongError> for MidiError {
    fn from(e: SongError) -> Self {
        match e {
            SongError::EmptyInput => MidiError::EmptyInput,
            other => MidiError::Malformed { reason: other.to_string() },
        }
    }
}

/// A resolved note with absolute times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidiNote {
    pub pitch: u8,
    pub onset: f64,
    pub offset: f64,
    pub channel: u8,
}

/// One SMF track chunk: its name (empty when the file gives none) and its
/// resolved notes sorted by onset.
#[derive(Debug, Clone)]
pub struct MidiTrack {
    pub name: String,
    pub notes: Vec<MidiNote>,
}

impl MidiTrack {
    fn percussion_only(&self) -> bool {
        !self.notes.is_empty() && self.notes.iter().all(|n| n.channel == PERCUSSION_CHANNEL)
    }

    fn melodic_note_count(&self) -> usize {
        self.notes.iter().filter(|n| n.channel != PERCUSSION_CHANNEL).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackSelection {
    pub indices: Vec<usize>,
    /// True when no track name matched and the densest track was used.
    pub fallback: bool,
}

/// What happened during one extraction, for downstream quality filtering.
#[derive(Debug, Clone, Serialize)]
pub struct ExtractionReport {
    pub tracks_seen: usize,
    pub tracks_selected: Vec<String>,
    pub fallback_track: bool,
    pub notes_emitted: usize,
    pub notes_dropped: usize,
    pub drop_reasons: BTreeMap<String, usize>,
    pub pitch_min: Option<u8>,
    pub pitch_max: Option<u8>,
}

/// Piecewise-linear tick to seconds conversion built from tempo events.
struct TempoMap {
    /// (start_tick, seconds_at_start, seconds_per_tick)
    segments: Vec<(u64, f64, f64)>,
}

impl TempoMap {
    fn new(timing: Timing, tempo_events: &mut [(u64, u32)]) -> Result<Self, MidiError> {
        match timing {
            Timing::Metrical(tpq) => {
                let tpq = f64::from(tpq.as_int());
                tempo_events.sort_by_key(|&(tick, _)| tick);
                // Default 120 bpm until the first tempo event.
                let mut segments = vec![(0u64, 0.0, 500_000.0 / (1e6 * tpq))];
                for &(tick, us_per_beat) in tempo_events.iter() {
                    let sec = Self::convert(&segments, tick);
                    segments.push((tick, sec, f64::from(us_per_beat) / (1e6 * tpq)));
                }
                Ok(Self { segments })
            }
            Timing::Timecode(fps, subframe) => {
                let ticks_per_sec = f64::from(fps.as_f32()) * f64::from(subframe);
                Ok(Self { segments: vec![(0, 0.0, 1.0 / ticks_per_sec)] })
            }
        }
    }

    fn convert(segments: &[(u64, f64, f64)], tick: u64) -> f64 {
        let idx = segments.partition_point(|&(start, _, _)| start <= tick) - 1;
        let (start, sec, per_tick) = segments[idx];
        sec + (tick - start) as f64 * per_tick
    }

    fn seconds(&self, tick: u64) -> f64 {
        Self::convert(&self.segments, tick)
    }
}

/// Parses a format 0 or 1 Standard MIDI File into its tracks, resolving
/// note-on/note-off pairs (a note-on with velocity 0 counts as a note-off)
/// and converting ticks to seconds with the file's tempo map.
pub fn parse_midi(bytes: &[u8]) -> Result<Vec<MidiTrack>, MidiError> {
    let smf = Smf::parse(bytes).map_err(|e| MidiError::Malformed { reason: e.to_string() })?;
    if smf.header.format == Format::Sequential {
        return Err(MidiError::Unsupported("format 2 (sequential) files".into()));
    }

    // First pass: tempo events from every track, on absolute ticks.
    let mut tempo_events: Vec<(u64, u32)> = Vec::new();
    for track in &smf.tracks {
        let mut tick = 0u64;
        for event in track {
            tick += u64::from(event.delta.as_int());
            if let TrackEventKind::Meta(MetaMessage::Tempo(us)) = event.kind {
                tempo_events.push((tick, us.as_int()));
            }
        }
    }
    let tempo_map = TempoMap::new(smf.header.timing, &mut tempo_events)?;

    let mut tracks = Vec::with_capacity(smf.tracks.len());
    for track in &smf.tracks {
        let mut name = String::new();
        let mut open: HashMap<(u8, u8), VecDeque<u64>> = HashMap::new();
        let mut notes_ticks: Vec<(u64, u64, u8, u8)> = Vec::new();
        let mut tick = 0u64;
        for event in track {
            tick += u64::from(event.delta.as_int());
            match event.kind {
                TrackEventKind::Meta(MetaMessage::TrackName(raw)) if name.is_empty() => {
                    name = String::from_utf8_lossy(raw).into_owned();
                }
                TrackEventKind::Midi { channel, message } => {
                    let ch = channel.as_int();
                    match message {
                        MidiMessage::NoteOn { key, vel } if vel.as_int() > 0 => {
                            open.entry((ch, key.as_int())).or_default().push_back(tick);
                        }
                        MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                            if let Some(onsets) = open.get_mut(&(ch, key.as_int())) {
                                if let Some(onset) = onsets.pop_front() {
                                    notes_ticks.push((onset, tick, key.as_int(), ch));
                                }
                            }
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
        }
        // Note-ons that never close are dropped, like a truncated recording.
        notes_ticks.sort_by_key(|&(onset, offset, pitch, _)| (onset, pitch, offset));
        let notes = notes_ticks
            .into_iter()
            .map(|(onset, offset, pitch, channel)| MidiNote {
                pitch,
                onset: tempo_map.seconds(onset),
                offset: tempo_map.seconds(offset),
                channel,
            })
            .collect();
        tracks.push(MidiTrack { name, notes });
    }
    Ok(tracks)
}

/// Picks the tracks whose name contains "melody" or "vocal"
/// (case-insensitive). When none match, falls back to the note-densest
/// non-percussion track and says so. Percussion tracks are never selected.
pub fn select_melody_tracks(tracks: &[MidiTrack]) -> Result<TrackSelection, MidiError> {
    if tracks.iter().all(|t| t.notes.is_empty()) {
        return Err(MidiError::NoTracks("file has no note-bearing tracks".into()));
    }
    let candidates: Vec<usize> = tracks
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.notes.is_empty() && !t.percussion_only())
        .map(|(i, _)| i)
        .collect();
    if candidates.is_empty() {
        return Err(MidiError::NoTracks("only percussion tracks carry notes".into()));
    }
    let named: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&i| {
            let lower = tracks[i].name.to_lowercase();
            lower.contains("melody") || lower.contains("vocal")
        })
        .collect();
    if !named.is_empty() {
        return Ok(TrackSelection { indices: named, fallback: false });
    }
    let densest = candidates
        .into_iter()
        .max_by_key(|&i| (tracks[i].melodic_note_count(), std::cmp::Reverse(i)))
        .expect("candidates non-empty");
    Ok(TrackSelection { indices: vec![densest], fallback: true })
}

/// Full extraction: parse, select tracks, merge their notes, and reduce to
/// melody triplets. Percussion-channel and zero-length notes are dropped;
/// of notes struck at the same instant only the highest survives (the top
/// line is the melody). Partial overlaps are kept and simply yield negative
/// rest durations.
pub fn extract(bytes: &[u8]) -> Result<(Vec<MelodyTriplet>, ExtractionReport), MidiError> {
    let tracks = parse_midi(bytes)?;
    let selection = select_melody_tracks(&tracks)?;

    let mut drop_reasons: BTreeMap<String, usize> = BTreeMap::new();
    let mut drop = |reason: &str| *drop_reasons.entry(reason.to_string()).or_insert(0) += 1;

    let mut merged: Vec<MidiNote> = Vec::new();
    for &i in &selection.indices {
        for note in &tracks[i].notes {
            if note.channel == PERCUSSION_CHANNEL {
                drop("percussion");
            } else if note.offset <= note.onset {
                drop("zero_length");
            } else {
                merged.push(*note);
            }
        }
    }
    merged.sort_by(|a, b| {
        a.onset
            .total_cmp(&b.onset)
            .then(b.pitch.cmp(&a.pitch))
            .then(a.offset.total_cmp(&b.offset))
    });

    let mut events: Vec<NoteEvent> = Vec::new();
    for note in &merged {
        if events.last().is_some_and(|last| last.onset == note.onset) {
            drop("simultaneous");
            continue;
        }
        events.push(NoteEvent { pitch: note.pitch, onset: note.onset, offset: note.offset });
    }

    let triplets = triplets_from_events(&events)?;
    let report = ExtractionReport {
        tracks_seen: tracks.len(),
        tracks_selected: selection.indices.iter().map(|&i| tracks[i].name.clone()).collect(),
        fallback_track: selection.fallback,
        notes_emitted: triplets.len(),
        notes_dropped: drop_reasons.values().sum(),
        drop_reasons,
        pitch_min: events.iter().map(|e| e.pitch).min(),
        pitch_max: events.iter().map(|e| e.pitch).max(),
    };
    Ok((triplets, report))
}

/// Builds a single-track MIDI file at 60 bpm from a triplet list, the
/// inverse of `extract` for synthetic data. Onsets must come out
/// non-negative (rests may be negative only up to the preceding notes).
pub fn write_melody_midi(
    triplets: &[MelodyTriplet],
    track_name: &str,
) -> Result<Vec<u8>, MidiError> {
    let to_tick = |sec: f64| -> Result<u64, MidiError> {
        let t = (sec * f64::from(WRITE_TPQ)).round();
        if t < 0.0 {
            return Err(MidiError::Malformed { reason: format!("negative event time {sec}") });
        }
        Ok(t as u64)
    };

    // (tick, is_note_on, key); offs sort before ons at the same tick so a
    // zero rest does not merge consecutive same-pitch notes.
    let mut events: Vec<(u64, bool, u8)> = Vec::new();
    let mut onset = 0.0;
    for t in triplets {
        let offset = onset + t.note_duration;
        events.push((to_tick(onset)?, true, t.pitch));
        events.push((to_tick(offset)?, false, t.pitch));
        onset = offset + t.rest_duration;
    }
    events.sort_by_key(|&(tick, is_on, _)| (tick, is_on));

    let mut track: Vec<TrackEvent> = vec![
        TrackEvent {
            delta: u28::new(0),
            kind: TrackEventKind::Meta(MetaMessage::Tempo(WRITE_TEMPO_US.into())),
        },
        TrackEvent {
            delta: u28::new(0),
            kind: TrackEventKind::Meta(MetaMessage::TrackName(track_name.as_bytes())),
        },
    ];
    let mut last_tick = 0u64;
    for &(tick, is_on, key) in &events {
        let delta = u28::new((tick - last_tick) as u32);
        last_tick = tick;
        let message = if is_on {
            MidiMessage::NoteOn { key: key.into(), vel: 96.into() }
        } else {
            MidiMessage::NoteOff { key: key.into(), vel: 0.into() }
        };
        track.push(TrackEvent {
            delta,
            kind: TrackEventKind::Midi { channel: 0.into(), message },
        });
    }
    track.push(TrackEvent {
        delta: u28::new(0),
        kind: TrackEventKind::Meta(MetaMessage::EndOfTrack),
    });

    let mut smf = Smf::new(Header::new(
        Format::SingleTrack,
        Timing::Metrical(WRITE_TPQ.into()),
    ));
    smf.tracks.push(track);
    let mut bytes = Vec::new();
    smf.write_std(&mut bytes)
        .map_err(|e| MidiError::Malformed { reason: e.to_string() })?;
    Ok(bytes)
}
