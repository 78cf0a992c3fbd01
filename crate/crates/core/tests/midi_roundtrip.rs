//! Golden round trip: triplets written to a synthetic MIDI file at 60 bpm
//! come back unchanged through extraction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use songkit::midi::{extract, write_melody_midi};
use songkit::testkit::random_grid_triplets;

#[test]
fn synthetic_files_round_trip_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3D1);
    for case in 0..100 {
        let len = rng.gen_range(1..=30);
        let triplets = random_grid_triplets(&mut rng, len);
        let bytes = write_melody_midi(&triplets, "melody").unwrap();
        let (extracted, report) = extract(&bytes).unwrap();
        assert_eq!(extracted.len(), triplets.len(), "case {case}");
        for (i, (a, b)) in triplets.iter().zip(&extracted).enumerate() {
            assert_eq!(a.pitch, b.pitch, "case {case} note {i}");
            assert!(
                (a.note_duration - b.note_duration).abs() < 1e-6,
                "case {case} note {i}: {} vs {}",
                a.note_duration,
                b.note_duration
            );
            assert!(
                (a.rest_duration - b.rest_duration).abs() < 1e-6,
                "case {case} note {i}: {} vs {}",
                a.rest_duration,
                b.rest_duration
            );
        }
        assert_eq!(report.notes_emitted, triplets.len());
        assert_eq!(report.notes_dropped, 0);
        assert_eq!(report.tracks_selected, vec!["melody".to_string()]);
    }
}

#[test]
fn extraction_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3D2);
    let triplets = random_grid_triplets(&mut rng, 25);
    let bytes = write_melody_midi(&triplets, "vocal line").unwrap();
    let (a, _) = extract(&bytes).unwrap();
    let (b, _) = extract(&bytes).unwrap();
    assert_eq!(a, b);
}
