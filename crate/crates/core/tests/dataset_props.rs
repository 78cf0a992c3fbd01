//! Dataset builder properties: chunk determinism and content preservation,
//! augmentation structure, mixing balance, and QA answers that parse back.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use songkit::dataset::{
    augment_melody, chunk_song, mix_corpora, render_qa, PretrainSample, Provenance, QaParams,
    SftTask, TemplateSet,
};
use songkit::song::EntryKind;
use songkit::testkit::{random_entry, random_paired_song};
use songkit::text::parse;
use songkit::Language;

fn sample(entry: songkit::SongEntry) -> PretrainSample {
    PretrainSample {
        entry,
        provenance: Provenance { source: "test".into(), line_offset: 0 },
        shift: 0,
        flag: None,
    }
}

#[test]
fn chunks_are_deterministic_and_rejoin_to_the_song() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDA7A);
    for case in 0..50 {
        let song = random_paired_song(&mut rng, 1..40);
        let seed = rng.gen();
        let a = chunk_song(&song, "src", seed);
        let b = chunk_song(&song, "src", seed);
        assert_eq!(a, b, "case {case}");
        let rejoined: Vec<_> = a.iter().flat_map(|c| c.entry.lines.clone()).collect();
        assert_eq!(rejoined, song.lines, "case {case}");
        for chunk in &a {
            assert_eq!(chunk.provenance.source, "src");
            assert_eq!(
                chunk.entry.lines[..],
                song.lines[chunk.provenance.line_offset
                    ..chunk.provenance.line_offset + chunk.entry.lines.len()]
            );
        }
    }
}

#[test]
fn augmentation_keeps_identity_and_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA06);
    for _ in 0..50 {
        let entry = random_entry(&mut rng, EntryKind::Paired, Language::English);
        let base = sample(entry);
        let (variants, dropped) = augment_melody(&base);
        assert_eq!(variants.len() + dropped.len(), 9);
        assert!(variants.iter().any(|v| v.shift == 0 && v.entry == base.entry));
        for v in &variants {
            assert_eq!(v.entry.lines.len(), base.entry.lines.len());
            for (line_v, line_b) in v.entry.lines.iter().zip(&base.entry.lines) {
                assert_eq!(line_v.len(), line_b.len());
                for (tv, tb) in line_v.iter().zip(line_b) {
                    assert_eq!(tv.word, tb.word);
                    assert_eq!(tv.notes.len(), tb.notes.len());
                    for (nv, nb) in tv.notes.iter().zip(&tb.notes) {
                        assert_eq!(nv.duration_bin, nb.duration_bin);
                        assert_eq!(nv.rest_bin, nb.rest_bin);
                        assert_eq!(
                            i32::from(nv.pitch.midi()) - i32::from(nb.pitch.midi()),
                            v.shift
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn mixing_window_property_holds_for_equal_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x313);
    for k in 1..=8usize {
        let lyric: Vec<_> = (0..k)
            .map(|_| sample(random_entry(&mut rng, EntryKind::PureLyric, Language::English)))
            .collect();
        let melody: Vec<_> = (0..k)
            .map(|_| sample(random_entry(&mut rng, EntryKind::PureMelody, Language::Unspecified)))
            .collect();
        let paired: Vec<_> = (0..k)
            .map(|_| sample(random_entry(&mut rng, EntryKind::Paired, Language::Chinese)))
            .collect();
        let stream = mix_corpora(&lyric, &melody, &paired, k as u64).unwrap();
        assert_eq!(stream.len(), 3 * k);
        // Every window, at every offset.
        for window in stream.windows(3) {
            let kinds: HashSet<_> = window.iter().map(|s| s.entry.kind).collect();
            assert_eq!(kinds.len(), 3, "k={k}");
        }
    }
}

#[test]
fn mixing_is_seed_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x314);
    let lyric: Vec<_> = (0..5)
        .map(|_| sample(random_entry(&mut rng, EntryKind::PureLyric, Language::English)))
        .collect();
    let melody: Vec<_> = (0..3)
        .map(|_| sample(random_entry(&mut rng, EntryKind::PureMelody, Language::Unspecified)))
        .collect();
    let paired: Vec<_> = (0..2)
        .map(|_| sample(random_entry(&mut rng, EntryKind::Paired, Language::English)))
        .collect();
    let a = mix_corpora(&lyric, &melody, &paired, 9).unwrap();
    let b = mix_corpora(&lyric, &melody, &paired, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 15);
}

#[test]
fn rendered_answers_always_parse_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x404);
    let templates = TemplateSet::default();
    for _ in 0..100 {
        let song = random_paired_song(&mut rng, 2..8);
        let n = rng.gen_range(1..song.lines.len());
        let cases = [
            render_qa(SftTask::LyricToMelody, &song, &QaParams::default(), &templates),
            render_qa(SftTask::MelodyToLyric, &song, &QaParams::default(), &templates),
            render_qa(
                SftTask::Continuation,
                &song,
                &QaParams { extend_lines: Some(n), ..Default::default() },
                &templates,
            ),
            render_qa(
                SftTask::TextToSong,
                &song,
                &QaParams { summary: Some("a short demo summary".into()), ..Default::default() },
                &templates,
            ),
        ];
        for qa in cases {
            let qa = qa.unwrap();
            let answer = parse(&qa.answer).unwrap();
            assert!(answer.validate().is_empty());
            if qa.task == SftTask::Continuation {
                let given = parse(qa.prompt.split_once('\n').unwrap().1).unwrap();
                assert_eq!(given.lines.len() + answer.lines.len(), song.lines.len());
            }
        }
    }
}
