//! Metric properties: self-similarity, transposition invariances, and
//! calibration idempotency on random melodies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use songkit::metrics::{
    calibration, distribution_similarity, evaluate_melody, MelodyEvalPair,
};
use songkit::song::MelodyTriplet;
use songkit::testkit::random_triplets;

fn shift(melody: &[MelodyTriplet], semitones: i8) -> Vec<MelodyTriplet> {
    melody
        .iter()
        .map(|t| MelodyTriplet {
            pitch: (i16::from(t.pitch) + i16::from(semitones)) as u8,
            ..*t
        })
        .collect()
}

#[test]
fn self_similarity_is_perfect() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let melody = random_triplets(&mut rng, 1..40, 30, 90);
        let pair = MelodyEvalPair::new(melody.clone(), melody).unwrap();
        let scores = evaluate_melody(&pair);
        assert_eq!(scores.pd, 100.0);
        assert_eq!(scores.dd, 100.0);
        assert_eq!(scores.md, 0.0);
    }
}

#[test]
fn pd_is_invariant_under_common_transposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for _ in 0..50 {
        let generated = random_triplets(&mut rng, 2..30, 40, 80);
        let reference = random_triplets(&mut rng, 2..30, 40, 80);
        let k = rng.gen_range(-10i8..=10);
        let base = evaluate_melody(
            &MelodyEvalPair::new(generated.clone(), reference.clone()).unwrap(),
        );
        let moved = evaluate_melody(
            &MelodyEvalPair::new(shift(&generated, k), shift(&reference, k)).unwrap(),
        );
        assert_eq!(base.pd, moved.pd, "k={k}");
        assert_eq!(base.dd, moved.dd, "k={k}");
    }
}

#[test]
fn md_is_invariant_under_single_side_transposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(79);
    for _ in 0..50 {
        let generated = random_triplets(&mut rng, 2..25, 40, 80);
        let reference = random_triplets(&mut rng, 2..25, 40, 80);
        let k = rng.gen_range(-10i8..=10);
        let base =
            evaluate_melody(&MelodyEvalPair::new(generated.clone(), reference.clone()).unwrap());
        let gen_moved =
            evaluate_melody(&MelodyEvalPair::new(shift(&generated, k), reference.clone()).unwrap());
        let ref_moved =
            evaluate_melody(&MelodyEvalPair::new(generated, shift(&reference, k)).unwrap());
        assert_eq!(base.md, gen_moved.md, "generated side, k={k}");
        assert_eq!(base.md, ref_moved.md, "reference side, k={k}");
    }
}

#[test]
fn calibration_applied_once_settles() {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    for _ in 0..100 {
        let generated = random_triplets(&mut rng, 2..30, 50, 70);
        let reference = random_triplets(&mut rng, 2..30, 50, 70);
        let pair = MelodyEvalPair::new(generated.clone(), reference.clone()).unwrap();
        let cal = calibration(&pair);
        // Apply the affine step and calibrate again: nothing left to move.
        let adjusted: Vec<MelodyTriplet> = generated
            .iter()
            .map(|t| MelodyTriplet {
                pitch: (i32::from(t.pitch) + cal.pitch_offset) as u8,
                note_duration: t.note_duration * cal.duration_ratio,
                rest_duration: t.rest_duration * cal.duration_ratio,
            })
            .collect();
        let second = calibration(&MelodyEvalPair::new(adjusted, reference).unwrap());
        assert_eq!(second.pitch_offset, 0);
        assert!((second.duration_ratio - 1.0).abs() < 1e-9, "{}", second.duration_ratio);
    }
}

#[test]
fn distribution_similarity_stays_in_bounds_and_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    for _ in 0..200 {
        let a: Vec<i64> = (0..rng.gen_range(1..50)).map(|_| rng.gen_range(0..20)).collect();
        let b: Vec<i64> = (0..rng.gen_range(1..50)).map(|_| rng.gen_range(0..20)).collect();
        let ab = distribution_similarity(&a, &b);
        let ba = distribution_similarity(&b, &a);
        assert!((0.0..=100.0 + 1e-9).contains(&ab));
        assert!((ab - ba).abs() < 1e-9);
    }
}
