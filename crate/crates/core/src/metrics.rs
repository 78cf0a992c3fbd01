//! Objective evaluation: pitch/duration distribution similarity (histogram
//! intersection), melody distance (DTW over mean-centered sixteenth-grid
//! pitch series after calibration), ROUGE-2 for lyrics, and cosine
//! similarity over externally supplied embeddings.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::song::{is_cjk, Language, MelodyTriplet};

/// Seconds per grid unit: the evaluation grid treats 1/16 second as one
/// sixteenth note, following the bpm-60 convention.
pub const GRID_SECONDS: f64 = 1.0 / 16.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("melodies under evaluation must be non-empty")]
    EmptyMelody,
    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
}

/// A generated melody and the reference it is scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct MelodyEvalPair {
    pub generated: Vec<MelodyTriplet>,
    pub reference: Vec<MelodyTriplet>,
}

impl MelodyEvalPair {
    pub fn new(
        generated: Vec<MelodyTriplet>,
        reference: Vec<MelodyTriplet>,
    ) -> Result<Self, MetricsError> {
        if generated.is_empty() || reference.is_empty() {
            return Err(MetricsError::EmptyMelody);
        }
        Ok(Self { generated, reference })
    }
}

/// The affine normalization applied to the generated side before scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Semitones added to every generated pitch (ties round to even).
    pub pitch_offset: i32,
    /// Factor applied to every generated note and rest duration.
    pub duration_ratio: f64,
}

/// A note on the evaluation grid after calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalibratedNote {
    pub pitch: i32,
    /// Sixteenth-grid units the note sounds for, at least 1.
    pub note_units: u32,
    /// Sixteenth-grid units of following silence; negative on overlap.
    pub rest_units: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedPair {
    pub generated: Vec<CalibratedNote>,
    pub reference: Vec<CalibratedNote>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    sum / count as f64
}

/// Computes the mean-pitch offset and mean-duration ratio that align the
/// generated melody with the reference. Applying the result and computing
/// again yields offset 0 and ratio 1.
pub fn calibration(pair: &MelodyEvalPair) -> Calibration {
    let gen_pitch = mean(pair.generated.iter().map(|t| f64::from(t.pitch)));
    let ref_pitch = mean(pair.reference.iter().map(|t| f64::from(t.pitch)));
    let gen_dur = mean(pair.generated.iter().map(|t| t.note_duration));
    let ref_dur = mean(pair.reference.iter().map(|t| t.note_duration));
    Calibration {
        pitch_offset: (ref_pitch - gen_pitch).round_ties_even() as i32,
        duration_ratio: ref_dur / gen_dur,
    }
}

fn quantize(pitch: i32, note_duration: f64, rest_duration: f64) -> CalibratedNote {
    CalibratedNote {
        pitch,
        note_units: ((note_duration / GRID_SECONDS).round() as i64).max(1) as u32,
        rest_units: (rest_duration / GRID_SECONDS).round() as i32,
    }
}

/// Full calibration: shift generated pitches by the rounded mean difference,
/// rescale generated durations by the mean-duration ratio, then snap both
/// sides onto the sixteenth grid (every note keeps at least one unit).
pub fn calibrate(pair: &MelodyEvalPair) -> CalibratedPair {
    let cal = calibration(pair);
    let generated = pair
        .generated
        .iter()
        .map(|t| {
            quantize(
                i32::from(t.pitch) + cal.pitch_offset,
                t.note_duration * cal.duration_ratio,
                t.rest_duration * cal.duration_ratio,
            )
        })
        .collect();
    let reference = pair
        .reference
        .iter()
        .map(|t| quantize(i32::from(t.pitch), t.note_duration, t.rest_duration))
        .collect();
    CalibratedPair { generated, reference }
}

/// Histogram intersection of two value distributions, in percent: build
/// normalized frequency histograms over the union of observed values and
/// sum the pointwise minima. Identical distributions score 100, disjoint
/// value sets score 0.
pub fn distribution_similarity(a: &[i64], b: &[i64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<i64, (u64, u64)> = HashMap::new();
    for &v in a {
        counts.entry(v).or_default().0 += 1;
    }
    for &v in b {
        counts.entry(v).or_default().1 += 1;
    }
    // Integer arithmetic over the common denominator na*nb, so identical
    // distributions score exactly 100.
    let (na, nb) = (a.len() as u64, b.len() as u64);
    let overlap: u64 = counts.values().map(|&(ca, cb)| (ca * nb).min(cb * na)).sum();
    100.0 * overlap as f64 / (na * nb) as f64
}

fn pitch_series(notes: &[CalibratedNote]) -> Vec<f64> {
    let mut series: Vec<i64> = Vec::new();
    for note in notes {
        for _ in 0..note.note_units {
            series.push(i64::from(note.pitch));
        }
    }
    // Center as (p*n - sum)/n: the numerator is exact integer arithmetic,
    // so transposing the series shifts nothing at all.
    let n = series.len() as i64;
    let sum: i64 = series.iter().sum();
    series.iter().map(|&p| (p * n - sum) as f64 / n as f64).collect()
}

/// DTW distance with absolute-difference local cost, normalized by the
/// length of the optimal warping path.
fn dtw_normalized(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut dp = vec![vec![f64::INFINITY; m]; n];
    for i in 0..n {
        for j in 0..m {
            let cost = (a[i] - b[j]).abs();
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => dp[0][j - 1],
                (_, 0) => dp[i - 1][0],
                _ => dp[i - 1][j - 1].min(dp[i - 1][j]).min(dp[i][j - 1]),
            };
            dp[i][j] = cost + best;
        }
    }
    // Walk the path back to measure its length; diagonal wins ties.
    let (mut i, mut j) = (n - 1, m - 1);
    let mut path_len = 1u64;
    while i > 0 || j > 0 {
        path_len += 1;
        if i == 0 {
            j -= 1;
        } else if j == 0 {
            i -= 1;
        } else {
            let diag = dp[i - 1][j - 1];
            let up = dp[i - 1][j];
            let left = dp[i][j - 1];
            if diag <= up && diag <= left {
                i -= 1;
                j -= 1;
            } else if up <= left {
                i -= 1;
            } else {
                j -= 1;
            }
        }
    }
    dp[n - 1][m - 1] / path_len as f64
}

/// Melody distance: expand both calibrated melodies into per-sixteenth
/// pitch series (rests contribute no samples), subtract each series' own
/// mean, and return the path-normalized DTW distance. Mean-centering makes
/// the metric invariant to transposing either side alone.
pub fn melody_distance(pair: &CalibratedPair) -> f64 {
    let a = pitch_series(&pair.generated);
    let b = pitch_series(&pair.reference);
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    dtw_normalized(&a, &b)
}

/// The three melody scores reported for a generated/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MelodyScores {
    pub pd: f64,
    pub dd: f64,
    pub md: f64,
}

/// Calibrates the pair and computes pitch distribution similarity, duration
/// distribution similarity, and melody distance.
pub fn evaluate_melody(pair: &MelodyEvalPair) -> MelodyScores {
    let calibrated = calibrate(pair);
    let pitches = |notes: &[CalibratedNote]| notes.iter().map(|n| i64::from(n.pitch)).collect::<Vec<_>>();
    let durations =
        |notes: &[CalibratedNote]| notes.iter().map(|n| i64::from(n.note_units)).collect::<Vec<_>>();
    MelodyScores {
        pd: distribution_similarity(&pitches(&calibrated.generated), &pitches(&calibrated.reference)),
        dd: distribution_similarity(
            &durations(&calibrated.generated),
            &durations(&calibrated.reference),
        ),
        md: melody_distance(&calibrated),
    }
}

fn rouge_tokens(text: &str, char_mode: bool) -> Vec<String> {
    if char_mode {
        text.chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect()
    } else {
        text.to_lowercase()
            .split_whitespace()
            .map(String::from)
            .collect()
    }
}

/// ROUGE-2 F1: bigram multiset overlap between candidate and reference.
/// English tokenizes into lowercased whitespace words, Chinese into single
/// characters; with an unspecified language the mode is inferred from the
/// texts. Returns 0 when either side has fewer than two tokens.
pub fn rouge2(candidate: &str, reference: &str, language: Language) -> f64 {
    let char_mode = match language {
        Language::English => false,
        Language::Chinese => true,
        Language::Unspecified => {
            candidate.chars().any(is_cjk) || reference.chars().any(is_cjk)
        }
    };
    let c = rouge_tokens(candidate, char_mode);
    let r = rouge_tokens(reference, char_mode);
    if c.len() < 2 || r.len() < 2 {
        return 0.0;
    }
    let mut ref_bigrams: HashMap<(&str, &str), u64> = HashMap::new();
    for pair in r.windows(2) {
        *ref_bigrams.entry((&pair[0], &pair[1])).or_default() += 1;
    }
    let mut overlap = 0u64;
    for pair in c.windows(2) {
        if let Some(count) = ref_bigrams.get_mut(&(pair[0].as_str(), pair[1].as_str())) {
            if *count > 0 {
                *count -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / (c.len() - 1) as f64;
    let recall = overlap as f64 / (r.len() - 1) as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Plain cosine similarity between two embedding vectors.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, MetricsError> {
    if u.len() != v.len() || u.is_empty() {
        return Err(MetricsError::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(MetricsError::ZeroVector);
    }
    Ok(dot / (nu * nv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triplet(pitch: u8, dur: f64, rest: f64) -> MelodyTriplet {
        MelodyTriplet { pitch, note_duration: dur, rest_duration: rest }
    }

    fn melody(pitches: &[u8]) -> Vec<MelodyTriplet> {
        pitches.iter().map(|&p| triplet(p, 0.25, 0.0)).collect()
    }

    #[test]
    fn identical_pair_calibrates_to_identity() {
        let m = melody(&[60, 62, 64]);
        let pair = MelodyEvalPair::new(m.clone(), m).unwrap();
        let cal = calibration(&pair);
        assert_eq!(cal.pitch_offset, 0);
        assert!((cal.duration_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transposed_generation_is_pulled_back() {
        let reference = melody(&[60, 62, 64]);
        let generated = melody(&[63, 65, 67]);
        let pair = MelodyEvalPair::new(generated, reference).unwrap();
        let cal = calibration(&pair);
        assert_eq!(cal.pitch_offset, -3);
        let calibrated = calibrate(&pair);
        assert_eq!(calibrated.generated, calibrated.reference);
    }

    #[test]
    fn doubled_durations_rescale_exactly() {
        let reference = vec![triplet(60, 0.5, 0.0), triplet(62, 1.0, 0.0)];
        let generated = vec![triplet(60, 1.0, 0.0), triplet(62, 2.0, 0.0)];
        let pair = MelodyEvalPair::new(generated, reference).unwrap();
        let cal = calibration(&pair);
        assert!((cal.duration_ratio - 0.5).abs() < 1e-12);
        let calibrated = calibrate(&pair);
        assert_eq!(calibrated.generated, calibrated.reference);
    }

    #[test]
    fn every_note_keeps_at_least_one_grid_unit() {
        let pair = MelodyEvalPair::new(
            vec![triplet(60, 0.01, 0.0)],
            vec![triplet(60, 0.01, 0.0)],
        )
        .unwrap();
        let calibrated = calibrate(&pair);
        assert_eq!(calibrated.generated[0].note_units, 1);
    }

    #[test]
    fn distribution_similarity_hand_case() {
        let sim = distribution_similarity(&[60, 60, 62], &[60, 62, 62]);
        assert!((sim - 200.0 / 3.0).abs() < 1e-9, "{sim}");
    }

    #[test]
    fn distribution_similarity_extremes() {
        assert!((distribution_similarity(&[1, 2, 3], &[1, 2, 3]) - 100.0).abs() < 1e-12);
        assert_eq!(distribution_similarity(&[1, 2], &[3, 4]), 0.0);
    }

    #[test]
    fn distribution_similarity_is_symmetric() {
        let a = [60, 60, 62, 65];
        let b = [60, 62, 62];
        assert!((distribution_similarity(&a, &b) - distribution_similarity(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn melody_distance_is_zero_on_self() {
        let m = melody(&[60, 64, 67, 64]);
        let pair = MelodyEvalPair::new(m.clone(), m).unwrap();
        assert_eq!(evaluate_melody(&pair).md, 0.0);
    }

    #[test]
    fn mean_centering_removes_constant_offsets() {
        // Four grid units of C4 against four of D4: centering removes the
        // constant 2-semitone gap that would otherwise score 2.0.
        let generated = vec![triplet(60, 0.25, 0.0)];
        let reference = vec![triplet(62, 0.25, 0.0)];
        let calibrated = CalibratedPair {
            generated: vec![CalibratedNote { pitch: 60, note_units: 4, rest_units: 0 }],
            reference: vec![CalibratedNote { pitch: 62, note_units: 4, rest_units: 0 }],
        };
        assert_eq!(melody_distance(&calibrated), 0.0);
        // And through full evaluation the calibration offset handles it too.
        let pair = MelodyEvalPair::new(generated, reference).unwrap();
        assert_eq!(evaluate_melody(&pair).md, 0.0);
    }

    #[test]
    fn rouge2_hand_case() {
        let f1 = rouge2("a b c d", "a b c e", Language::English);
        assert!((f1 - 2.0 / 3.0).abs() < 1e-9, "{f1}");
    }

    #[test]
    fn rouge2_extremes() {
        assert!((rouge2("my heart will go", "my heart will go", Language::English) - 1.0).abs() < 1e-12);
        assert_eq!(rouge2("a b", "c d", Language::English), 0.0);
        assert_eq!(rouge2("solo", "a b", Language::English), 0.0);
    }

    #[test]
    fn rouge2_is_case_insensitive_in_english() {
        assert!((rouge2("My Heart Sings", "my heart sings", Language::English) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rouge2_chinese_uses_characters() {
        assert!((rouge2("我爱你", "我爱你", Language::Chinese) - 1.0).abs() < 1e-12);
        let partial = rouge2("我爱你啊", "我爱他啊", Language::Chinese);
        assert!(partial > 0.0 && partial < 1.0);
        // Auto-detection picks character mode for CJK text.
        assert!((rouge2("我爱你", "我爱你", Language::Unspecified) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine_similarity(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap()).abs() < 1e-12);
        assert!((cosine_similarity(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            cosine_similarity(&[1.0], &[1.0, 2.0]),
            Err(MetricsError::DimensionMismatch { left: 1, right: 2 })
        );
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]), Err(MetricsError::ZeroVector));
    }
}
