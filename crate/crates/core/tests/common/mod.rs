#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use dsvs::corpus::{AnnotatedVideo, FeatureKind, FeatureMatrix, Segment};
use dsvs::functions::{
    Continuity, DisparityMin, FacilityLocation, GraphCut, Modular, ProbSetCover, SaturatedCoverage, SetCover,
    SetFunction,
};
use dsvs::kernels::{similarity_matrix, ConceptInterpretation, ConceptMatrix, DistanceMatrix, SimilarityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SNIPPET_SECONDS: f64 = 2.0;

/// Random annotated video with `n` snippets: segments of every rating, some
/// repetitive, unannotated gaps, half-snippet boundaries, random shots and a
/// dense feature family `f` plus a probability family `c`.
pub fn random_video(id: &str, n: usize, seed: u64) -> AnnotatedVideo {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments = Vec::new();
    let mut t = 0usize;
    while t < n {
        if rng.random_bool(0.2) {
            t += rng.random_range(1..=3);
            continue;
        }
        let len = rng.random_range(1..=12).min(n - t);
        let rating = rng.random_range(-3i8..=3);
        let mut seg = Segment::new(t as f64 * SNIPPET_SECONDS, (t + len) as f64 * SNIPPET_SECONDS, rating);
        if rng.random_bool(0.15) && len > 1 {
            seg.end_sec -= SNIPPET_SECONDS / 2.0 - 0.25;
        }
        seg.repetitive = rating >= 0 && rng.random_bool(0.3);
        segments.push(seg);
        t += len;
    }
    let mut shots = Vec::new();
    let mut s = 0;
    while s < n {
        let len = rng.random_range(1..=15).min(n - s);
        shots.push((s, s + len));
        s += len;
    }
    let dense: Vec<f32> = (0..n * 4).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let probs: Vec<f32> = (0..n * 5).map(|_| rng.random_range(0.0f32..1.0)).collect();
    let mut features = BTreeMap::new();
    features.insert(
        "f".to_string(),
        FeatureMatrix::new("f", FeatureKind::Dense, n, 4, dense).unwrap(),
    );
    features.insert(
        "c".to_string(),
        FeatureMatrix::new("c", FeatureKind::Probability, n, 5, probs).unwrap(),
    );
    AnnotatedVideo::new(id, SNIPPET_SECONDS, n, features, shots, segments).unwrap()
}

/// Random subset of `0..n` with each element kept with probability `p`.
pub fn random_subset(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<usize> {
    (0..n).filter(|_| rng.random_bool(p)).collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f32>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect())
        .collect()
}

pub fn random_similarity(rng: &mut ChaCha8Rng, n: usize) -> Arc<SimilarityMatrix> {
    let rows = random_points(rng, n, 3);
    let fm = FeatureMatrix::from_rows("f", FeatureKind::Dense, &rows).unwrap();
    Arc::new(similarity_matrix(&fm).unwrap())
}

pub fn random_concepts(rng: &mut ChaCha8Rng, n: usize, interpretation: ConceptInterpretation) -> Arc<ConceptMatrix> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..6)
                .map(|_| match interpretation {
                    ConceptInterpretation::Probability => rng.random_range(0.0..1.0),
                    ConceptInterpretation::Weight => f64::from(rng.random_range(0u8..4)),
                })
                .collect()
        })
        .collect();
    Arc::new(ConceptMatrix::from_rows(&rows, interpretation).unwrap())
}

pub fn random_shots(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut shots = Vec::new();
    let mut s = 0;
    while s < n {
        let len = rng.random_range(1..=4).min(n - s);
        shots.push((s, s + len));
        s += len;
    }
    shots
}

pub const KINDS: [&str; 8] = [
    "set_cover",
    "prob_set_cover",
    "facility_location",
    "saturated_coverage",
    "graph_cut",
    "disparity_min",
    "continuity",
    "modular",
];

/// A random instance of the named component kind on `n` elements.
pub fn random_component(kind: &str, rng: &mut ChaCha8Rng, n: usize) -> Box<dyn SetFunction> {
    match kind {
        "set_cover" => Box::new(SetCover::new(
            kind,
            random_concepts(rng, n, ConceptInterpretation::Weight),
        )),
        "prob_set_cover" => Box::new(ProbSetCover::new(
            kind,
            random_concepts(rng, n, ConceptInterpretation::Probability),
        )),
        "facility_location" => Box::new(FacilityLocation::new(kind, random_similarity(rng, n))),
        "saturated_coverage" => {
            let fraction = rng.random_range(0.05..0.5);
            Box::new(SaturatedCoverage::new(kind, random_similarity(rng, n), fraction))
        }
        "graph_cut" => {
            let lambda = rng.random_range(0.0..1.0);
            Box::new(GraphCut::new(kind, random_similarity(rng, n), lambda))
        }
        "disparity_min" => {
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
                .collect();
            Box::new(DisparityMin::new(kind, Arc::new(DistanceMatrix::euclidean(&pts))))
        }
        "continuity" => Box::new(Continuity::new(kind, &random_shots(rng, n))),
        "modular" => Box::new(Modular::new(
            kind,
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )),
        other => panic!("unknown kind {other}"),
    }
}
