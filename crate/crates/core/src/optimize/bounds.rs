//! Curvature bounds and randomized verification of the approximation
//! guarantees against the exhaustive oracle.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::greedy::{best_of_two, brute_force_opt, dispersion_greedy_max, greedy_max, randomized_greedy_max};
use super::{GroupWeights, Guarantee, ObjectiveMixture, NO_GUARANTEE};
use crate::corpus::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};
use crate::functions::{
    Continuity, DisparityMin, FacilityLocation, GraphCut, Modular, SaturatedCoverage, SetCover, SetFunction,
};
use crate::kernels::{similarity_matrix, ConceptInterpretation, ConceptMatrix, DistanceMatrix, SimilarityMatrix};

/// Randomized-greedy repetitions per instance.
const RANDOM_GREEDY_SEEDS: u64 = 50;
const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    /// `1 − min_j f(j | V∖j) / f(j)` of the submodular part.
    pub kappa_f: Option<f64>,
    /// `1 − min_j l(j) / l(j | V∖j)` of the supermodular part.
    pub kappa_l: Option<f64>,
    /// `(1 − e^{−(1−κ^l)κ_f}) / κ_f`, or `1 − κ^l` as `κ_f → 0`.
    pub bound: Option<f64>,
    /// The same expression with a positive exponent.
    pub printed_bound: Option<f64>,
    pub greedy_value: f64,
    pub opt_value: f64,
    pub holds: Option<bool>,
    pub note: Option<String>,
}

fn all_but(n: usize, j: usize) -> Vec<usize> {
    (0..n).filter(|&v| v != j).collect()
}

fn submodular_curvature(f: &dyn SetFunction) -> std::result::Result<f64, String> {
    let n = f.ground_size();
    let empty = f.evaluate(&[]);
    let full = f.evaluate(&(0..n).collect::<Vec<_>>());
    let mut worst = f64::INFINITY;
    for j in 0..n {
        let single = f.evaluate(&[j]) - empty;
        if single <= 0.0 {
            return Err(format!(
                "f({{{j}}}) = {single} leaves the submodular curvature undefined"
            ));
        }
        worst = worst.min((full - f.evaluate(&all_but(n, j))) / single);
    }
    Ok((1.0 - worst).clamp(0.0, 1.0))
}

fn supermodular_curvature(l: &dyn SetFunction) -> std::result::Result<f64, String> {
    let n = l.ground_size();
    let empty = l.evaluate(&[]);
    let full = l.evaluate(&(0..n).collect::<Vec<_>>());
    let mut worst = f64::INFINITY;
    for j in 0..n {
        let top = full - l.evaluate(&all_but(n, j));
        if top <= 0.0 {
            return Err(format!(
                "l({j} | V∖{j}) = {top} leaves the supermodular curvature undefined"
            ));
        }
        worst = worst.min((l.evaluate(&[j]) - empty) / top);
    }
    Ok((1.0 - worst).clamp(0.0, 1.0))
}

fn corrected_bound(kf: f64, kl: f64) -> f64 {
    if kf < 1e-12 {
        1.0 - kl
    } else {
        (1.0 - (-(1.0 - kl) * kf).exp()) / kf
    }
}

fn printed_bound(kf: f64, kl: f64) -> f64 {
    if kf < 1e-12 {
        -(1.0 - kl)
    } else {
        (1.0 - ((1.0 - kl) * kf).exp()) / kf
    }
}

/// Computes both curvatures from their definitions and checks greedy on
/// `f + l` against `bound × OPT`.
pub fn curvature_bound_check(msub: &dyn SetFunction, sup: &dyn SetFunction, k: usize) -> Result<CurvatureReport> {
    let n = msub.ground_size();
    if sup.ground_size() != n {
        return Err(Error::Dimension(format!("ground sizes {n} and {}", sup.ground_size())));
    }
    let mut obj = ObjectiveMixture::new(n);
    obj.push(msub.box_clone(), 1.0)?;
    obj.push(sup.box_clone(), 1.0)?;
    let greedy_value = greedy_max(&obj, k, true)?.value;
    let opt_value = brute_force_opt(&obj, k)?.value;
    let kf = submodular_curvature(msub);
    let kl = supermodular_curvature(sup);
    let note = match (&kf, &kl) {
        (Err(a), Err(b)) => Some(format!("{a}; {b}")),
        (Err(a), _) | (_, Err(a)) => Some(a.clone()),
        _ => None,
    };
    let (kappa_f, kappa_l) = (kf.ok(), kl.ok());
    let (bound, printed) = match (kappa_f, kappa_l) {
        (Some(f), Some(l)) => (Some(corrected_bound(f, l)), Some(printed_bound(f, l))),
        _ => (None, None),
    };
    Ok(CurvatureReport {
        kappa_f,
        kappa_l,
        bound,
        printed_bound: printed,
        greedy_value,
        opt_value,
        holds: bound.map(|b| greedy_value >= b * opt_value - TOLERANCE * opt_value.abs().max(1.0)),
        note,
    })
}

/// Guarantee metadata of a weight-pattern case without building an instance.
pub fn guarantee_for_case(case: u8) -> Result<Guarantee> {
    let w = |msub, nmsub, sup, dispersion| GroupWeights {
        msub,
        nmsub,
        sup,
        dispersion,
        other: 0.0,
    };
    let g = match case {
        1 => w(1.0, 0.0, 0.0, 0.0),
        2 => w(0.0, 0.0, 0.0, 1.0),
        3 => w(0.0, 1.0, 0.0, 0.0),
        4 => w(1.0, 0.0, 0.0, 1.0),
        5 => w(0.0, 1.0, 0.0, 1.0),
        6 => w(1.0, 0.0, 1.0, 0.0),
        7 => w(1.0, 0.0, 1.0, 1.0),
        8 => w(0.0, 1.0, 1.0, 0.0),
        _ => return Err(Error::InvalidArgument(format!("case must be 1..=8, got {case}"))),
    };
    Ok(g.guarantee())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub algorithm_value: f64,
    pub opt_value: f64,
    /// Required fraction of OPT; `None` when no guarantee applies.
    pub factor: Option<f64>,
    pub ratio: Option<f64>,
    pub violated: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub case: u8,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub algorithm: String,
    pub guarantee: String,
    pub tag: Option<String>,
    pub min_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
    /// Smallest `value − factor × OPT` over the trials.
    pub min_slack: Option<f64>,
    pub violations: usize,
    /// Trials without a usable ratio (OPT ≤ 0 or undefined curvature).
    pub skipped: usize,
    pub outcomes: Vec<TrialOutcome>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn to_text(&self) -> String {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        let mut s = format!(
            "case {} (n={}, k={}, trials={}, seed={})\n  algorithm: {}\n  guarantee: {}\n",
            self.case, self.n, self.k, self.trials, self.seed, self.algorithm, self.guarantee
        );
        if let Some(tag) = &self.tag {
            s += &format!("  tag: {tag}\n");
        }
        s += &format!(
            "  ratio min {}  mean {}  min slack {}\n  violations {}  skipped {}\n",
            f(self.min_ratio),
            f(self.mean_ratio),
            f(self.min_slack),
            self.violations,
            self.skipped
        );
        s
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(trial as u64))
}

fn random_similarity(rng: &mut ChaCha8Rng, n: usize) -> Arc<SimilarityMatrix> {
    let dim = 3;
    let values = (0..n * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let fm = FeatureMatrix::new("random", FeatureKind::Dense, n, dim, values).expect("finite values");
    Arc::new(similarity_matrix(&fm).expect("finite values"))
}

fn random_concepts(rng: &mut ChaCha8Rng, n: usize) -> Arc<ConceptMatrix> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..5)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        rng.random_range(0.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Arc::new(ConceptMatrix::from_rows(&rows, ConceptInterpretation::Weight).expect("valid weights"))
}

fn random_planar(rng: &mut ChaCha8Rng, n: usize) -> Arc<DistanceMatrix> {
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
        .collect();
    Arc::new(DistanceMatrix::euclidean(&pts))
}

fn random_shots(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut shots = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + rng.random_range(2..=5)).min(n);
        shots.push((start, end));
        start = end;
    }
    shots
}

fn weight(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.5..2.0)
}

fn monotone_submodular(rng: &mut ChaCha8Rng, n: usize) -> ObjectiveMixture {
    let sim = random_similarity(rng, n);
    let concepts = random_concepts(rng, n);
    let mut obj = ObjectiveMixture::new(n);
    let terms: Vec<Box<dyn SetFunction>> = vec![
        Box::new(FacilityLocation::new("fl", sim.clone())),
        Box::new(SetCover::new("sc", concepts)),
        Box::new(SaturatedCoverage::new("satcov", sim.clone(), 0.3)),
        Box::new(GraphCut::new("gc", sim, 0.3)),
    ];
    for t in terms {
        let w = weight(rng);
        obj.push(t, w).expect("matching ground sets");
    }
    obj
}

fn supermodular(rng: &mut ChaCha8Rng, n: usize) -> ObjectiveMixture {
    let scores = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let shots = random_shots(rng, n);
    let mut obj = ObjectiveMixture::new(n);
    obj.push(Box::new(Modular::new("mod", scores)), 1.0)
        .expect("matching ground sets");
    let w = weight(rng);
    obj.push(Box::new(Continuity::new("cont", &shots)), w)
        .expect("matching ground sets");
    obj
}

fn non_monotone(rng: &mut ChaCha8Rng, n: usize) -> ObjectiveMixture {
    let sim = random_similarity(rng, n);
    let lambda = rng.random_range(0.6..1.0);
    let mut obj = ObjectiveMixture::new(n);
    obj.push(Box::new(GraphCut::new("gc", sim, lambda)), 1.0)
        .expect("matching ground sets");
    obj
}

fn add_dispersion(rng: &mut ChaCha8Rng, obj: &mut ObjectiveMixture) {
    let n = obj.ground_size();
    let dist = random_planar(rng, n);
    let w = rng.random_range(1.0..10.0);
    obj.push(Box::new(DisparityMin::new("disp", dist)), w)
        .expect("matching ground sets");
}

struct Trial {
    value: f64,
    opt: f64,
    factor: Option<f64>,
    note: Option<String>,
}

fn run_trial(case: u8, rng: &mut ChaCha8Rng, n: usize, k: usize, trial_seed: u64) -> Result<Trial> {
    let e = std::f64::consts::E;
    let simple = |obj: &ObjectiveMixture, value: f64, factor: f64| -> Result<Trial> {
        Ok(Trial {
            value,
            opt: brute_force_opt(obj, k)?.value,
            factor: Some(factor),
            note: None,
        })
    };
    match case {
        1 => {
            let obj = monotone_submodular(rng, n);
            simple(&obj, greedy_max(&obj, k, true)?.value, 1.0 - 1.0 / e)
        }
        2 => {
            let mut obj = ObjectiveMixture::new(n);
            add_dispersion(rng, &mut obj);
            let dist = obj.distances().expect("dispersion term").clone();
            let value = obj.evaluate(&dispersion_greedy_max(&dist, k)?.elements);
            simple(&obj, value, 0.5)
        }
        3 => {
            let obj = non_monotone(rng, n);
            let mean = (0..RANDOM_GREEDY_SEEDS)
                .map(|s| randomized_greedy_max(&obj, k, trial_seed.wrapping_add(s)).map(|r| r.value))
                .sum::<Result<f64>>()?
                / RANDOM_GREEDY_SEEDS as f64;
            simple(&obj, mean, 1.0 / e)
        }
        4 => {
            let mut obj = monotone_submodular(rng, n);
            add_dispersion(rng, &mut obj);
            simple(&obj, best_of_two(&obj, k, trial_seed)?.selection.value, 0.25)
        }
        5 => {
            let mut obj = non_monotone(rng, n);
            add_dispersion(rng, &mut obj);
            simple(&obj, best_of_two(&obj, k, trial_seed)?.selection.value, 1.0 / (2.0 * e))
        }
        6 | 7 => {
            let msub = monotone_submodular(rng, n);
            let sup = supermodular(rng, n);
            let report = curvature_bound_check(&msub, &sup, k)?;
            if case == 6 {
                return Ok(Trial {
                    value: report.greedy_value,
                    opt: report.opt_value,
                    factor: report.bound,
                    note: report.note,
                });
            }
            let mut obj = ObjectiveMixture::new(n);
            obj.push(Box::new(msub), 1.0)?;
            obj.push(Box::new(sup), 1.0)?;
            add_dispersion(rng, &mut obj);
            let value = best_of_two(&obj, k, trial_seed)?.selection.value;
            Ok(Trial {
                value,
                opt: brute_force_opt(&obj, k)?.value,
                factor: report.bound.map(|b| b / 2.0),
                note: report.note,
            })
        }
        8 => {
            let mut obj = non_monotone(rng, n);
            let shots = random_shots(rng, n);
            let w = weight(rng);
            obj.push(Box::new(Continuity::new("cont", &shots)), w)?;
            let tag = obj.guarantee().tag.map(str::to_string);
            Ok(Trial {
                value: greedy_max(&obj, k, true)?.value,
                opt: brute_force_opt(&obj, k)?.value,
                factor: None,
                note: tag,
            })
        }
        _ => Err(Error::InvalidArgument(format!("case must be 1..=8, got {case}"))),
    }
}

/// Runs `trials` seeded random instances of one weight-pattern case and
/// compares the case's algorithm against the exhaustive optimum.
pub fn verify_bounds(case: u8, n: usize, k: usize, trials: usize, seed: u64) -> Result<BoundReport> {
    let g = guarantee_for_case(case)?;
    let guarantee = match (case, g.factor) {
        (6, _) => "(1 − e^{−(1−κ^l)κ_f}) / κ_f".to_string(),
        (7, _) => "(1 − e^{−(1−κ^l)κ_f}) / (2κ_f)".to_string(),
        (_, Some(f)) => format!("{f:.4} × OPT"),
        _ => "none".to_string(),
    };
    let mut outcomes = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let t = run_trial(case, &mut rng, n, k, seed.wrapping_add(trial as u64 * 7919))?;
        let ratio = (t.opt > 0.0).then(|| t.value / t.opt);
        let violated = match t.factor {
            Some(f) => t.value < f * t.opt - TOLERANCE * t.opt.abs().max(1.0),
            None => false,
        };
        outcomes.push(TrialOutcome {
            trial,
            algorithm_value: t.value,
            opt_value: t.opt,
            factor: t.factor,
            ratio,
            violated,
            note: t.note,
        });
    }
    let ratios: Vec<f64> = outcomes.iter().filter_map(|o| o.ratio).collect();
    let slacks: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.factor.map(|f| o.algorithm_value - f * o.opt_value))
        .collect();
    let skipped = outcomes
        .iter()
        .filter(|o| o.ratio.is_none() || (case != 8 && o.factor.is_none()))
        .count();
    Ok(BoundReport {
        case,
        n,
        k,
        trials,
        seed,
        algorithm: g.algorithm.to_string(),
        guarantee,
        tag: if case == 8 {
            Some(NO_GUARANTEE.to_string())
        } else {
            g.tag.map(str::to_string)
        },
        min_ratio: ratios.iter().copied().reduce(f64::min),
        mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        min_slack: slacks.iter().copied().reduce(f64::min),
        violations: outcomes.iter().filter(|o| o.violated).count(),
        skipped,
        outcomes,
    })
}
