//! Cardinality-constrained maximization of weighted set-function mixtures.

mod bounds;
mod greedy;

use crate::corpus::Summary;
use crate::error::{Error, Result};
use crate::functions::{SetFunction, Shape};
use crate::kernels::DistanceMatrix;

pub use bounds::{
    curvature_bound_check, guarantee_for_case, verify_bounds, BoundReport, CurvatureReport, TrialOutcome,
};
pub use greedy::{
    best_of_two, brute_force_opt, dispersion_greedy_max, greedy_max, greedy_max_with, randomized_greedy_max,
    split_greedy_max, BestOfTwo, GreedyOptions, Part, BRUTE_FORCE_MAX_K, BRUTE_FORCE_MAX_N,
};

/// One weighted component of a mixture.
#[derive(Debug, Clone)]
pub struct Term {
    pub func: Box<dyn SetFunction>,
    pub weight: f64,
}

impl Term {
    /// Gains of this term may be cached as upper bounds between greedy steps.
    pub fn is_lazy(&self) -> bool {
        let shape = self.func.shape();
        shape == Shape::Modular || (shape.is_submodular() && self.weight >= 0.0)
    }
}

/// `f(X) = Σ_i w_i f_i(X)` over a shared ground set.
#[derive(Debug, Clone)]
pub struct ObjectiveMixture {
    n: usize,
    terms: Vec<Term>,
    selected: Vec<usize>,
    flags: Vec<bool>,
}

impl ObjectiveMixture {
    pub fn new(n: usize) -> Self {
        ObjectiveMixture {
            n,
            terms: Vec::new(),
            selected: Vec::new(),
            flags: vec![false; n],
        }
    }

    pub fn with(mut self, func: impl SetFunction + 'static, weight: f64) -> Result<Self> {
        self.push(Box::new(func), weight)?;
        Ok(self)
    }

    /// Adds a term. Structured components need non-negative weights; modular
    /// and general terms take any finite weight.
    pub fn push(&mut self, mut func: Box<dyn SetFunction>, weight: f64) -> Result<()> {
        if func.ground_size() != self.n {
            return Err(Error::Dimension(format!(
                "{} has ground size {}, mixture has {}",
                func.name(),
                func.ground_size(),
                self.n
            )));
        }
        if !weight.is_finite() {
            return Err(Error::InvalidArgument(format!("weight {weight} of {}", func.name())));
        }
        if weight < 0.0 && !matches!(func.shape(), Shape::Modular | Shape::General) {
            return Err(Error::InvalidArgument(format!(
                "{} needs a non-negative weight, got {weight}",
                func.name()
            )));
        }
        func.reset();
        for &e in &self.selected {
            func.insert(e);
        }
        self.terms.push(Term { func, weight });
        Ok(())
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Splits into (dispersion terms, everything else).
    pub fn split_dispersion(&self) -> (ObjectiveMixture, ObjectiveMixture) {
        let mut disp = ObjectiveMixture::new(self.n);
        let mut rest = ObjectiveMixture::new(self.n);
        for t in &self.terms {
            let target = if t.func.shape() == Shape::Dispersion {
                &mut disp
            } else {
                &mut rest
            };
            target.terms.push(Term {
                func: t.func.clone(),
                weight: t.weight,
            });
        }
        disp.reset();
        rest.reset();
        (disp, rest)
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight.abs()).sum()
    }

    /// Grouped weights of the monotone-submodular, non-monotone-submodular,
    /// supermodular, dispersion and unclassified terms.
    pub fn group_weights(&self) -> GroupWeights {
        let mut g = GroupWeights::default();
        for t in self.terms.iter().filter(|t| t.weight != 0.0) {
            let w = t.weight.abs();
            let shape = t.func.shape();
            match shape {
                Shape::Dispersion => g.dispersion += w,
                Shape::General => g.other += w,
                s if s.is_submodular() => {
                    if t.weight > 0.0 && t.func.is_monotone() {
                        g.msub += w
                    } else {
                        g.nmsub += w
                    }
                }
                _ => g.sup += w,
            }
        }
        g
    }

    pub fn guarantee(&self) -> Guarantee {
        self.group_weights().guarantee()
    }

    pub fn distances(&self) -> Option<&DistanceMatrix> {
        self.terms.iter().find_map(|t| t.func.distances())
    }

    /// Gains of the lazy terms, in term order.
    pub(crate) fn lazy_gain(&self, e: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.weight != 0.0 && t.is_lazy())
            .map(|t| t.weight * t.func.gain(e))
            .sum()
    }

    /// Gains of the remaining terms, in term order.
    pub(crate) fn exact_gain(&self, e: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.weight != 0.0 && !t.is_lazy())
            .map(|t| t.weight * t.func.gain(e))
            .sum()
    }

    pub(crate) fn has_exact_terms(&self) -> bool {
        self.terms.iter().any(|t| t.weight != 0.0 && !t.is_lazy())
    }
}

impl SetFunction for ObjectiveMixture {
    fn name(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| format!("{}·{}", t.weight, t.func.name()))
            .collect();
        parts.join(" + ")
    }

    fn ground_size(&self) -> usize {
        self.n
    }

    fn shape(&self) -> Shape {
        let active: Vec<&Term> = self.terms.iter().filter(|t| t.weight != 0.0).collect();
        let shapes: Vec<Shape> = active.iter().map(|t| t.func.shape()).collect();
        let positive = active.iter().all(|t| t.weight > 0.0);
        if shapes.iter().all(|s| *s == Shape::Modular) {
            Shape::Modular
        } else if shapes.len() == 1 && shapes[0] == Shape::Dispersion {
            Shape::Dispersion
        } else if shapes.iter().all(|s| s.is_submodular()) && active.iter().all(|t| t.is_lazy()) {
            if positive && active.iter().all(|t| t.func.is_monotone()) {
                Shape::MonotoneSubmodular
            } else {
                Shape::Submodular
            }
        } else if positive && shapes.iter().all(|s| s.is_supermodular()) {
            if active.iter().all(|t| t.func.is_monotone()) {
                Shape::MonotoneSupermodular
            } else {
                Shape::Supermodular
            }
        } else {
            Shape::General
        }
    }

    fn is_monotone(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.weight == 0.0 || (t.weight > 0.0 && t.func.is_monotone()))
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.weight != 0.0)
            .map(|t| t.weight * t.func.evaluate(set))
            .sum()
    }

    fn selected(&self) -> &[usize] {
        &self.selected
    }

    fn is_selected(&self, e: usize) -> bool {
        self.flags[e]
    }

    fn value(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.weight != 0.0)
            .map(|t| t.weight * t.func.value())
            .sum()
    }

    fn gain(&self, e: usize) -> f64 {
        self.lazy_gain(e) + self.exact_gain(e)
    }

    fn insert(&mut self, e: usize) {
        for t in &mut self.terms {
            t.func.insert(e);
        }
        self.flags[e] = true;
        self.selected.push(e);
    }

    fn reset(&mut self) {
        for t in &mut self.terms {
            t.func.reset();
        }
        self.flags.fill(false);
        self.selected.clear();
    }

    fn distances(&self) -> Option<&DistanceMatrix> {
        ObjectiveMixture::distances(self)
    }

    fn box_clone(&self) -> Box<dyn SetFunction> {
        Box::new(self.clone())
    }
}

/// Result of an optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Chosen elements in insertion order.
    pub elements: Vec<usize>,
    /// Objective value of the chosen set.
    pub value: f64,
}

impl Selection {
    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.elements.clone();
        v.sort_unstable();
        v
    }

    pub fn to_summary(&self, video_id: impl Into<String>) -> Summary {
        Summary::new(video_id, self.elements.clone())
    }
}

/// Mixture weights grouped by component class.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GroupWeights {
    /// Monotone submodular (including non-negative modular terms).
    pub msub: f64,
    /// Non-monotone submodular.
    pub nmsub: f64,
    /// Supermodular.
    pub sup: f64,
    /// Dispersion.
    pub dispersion: f64,
    /// Terms of no known class.
    pub other: f64,
}

/// Approximation guarantee available for a weight pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Guarantee {
    /// Weight-pattern case 1..=8; `None` when some term has no class.
    pub case: Option<u8>,
    /// Constant factor when it does not depend on curvature.
    pub factor: Option<f64>,
    pub algorithm: &'static str,
    pub tag: Option<&'static str>,
}

pub const NO_GUARANTEE: &str = "heuristic, no guarantee";

impl GroupWeights {
    pub fn guarantee(&self) -> Guarantee {
        let e = std::f64::consts::E;
        let (case, factor, algorithm) = if self.other > 0.0 {
            (None, None, "greedy")
        } else if self.nmsub > 0.0 && self.sup > 0.0 {
            (Some(8), None, "greedy")
        } else if self.sup > 0.0 {
            if self.dispersion > 0.0 {
                (Some(7), None, "best of greedy and dispersion greedy")
            } else {
                (Some(6), None, "greedy")
            }
        } else if self.nmsub > 0.0 {
            if self.dispersion > 0.0 {
                (
                    Some(5),
                    Some(1.0 / (2.0 * e)),
                    "best of randomized greedy and dispersion greedy",
                )
            } else {
                (Some(3), Some(1.0 / e), "randomized greedy")
            }
        } else if self.dispersion > 0.0 {
            if self.msub > 0.0 {
                (Some(4), Some(0.25), "best of greedy and dispersion greedy")
            } else {
                (Some(2), Some(0.5), "dispersion greedy")
            }
        } else {
            (Some(1), Some(1.0 - 1.0 / e), "greedy")
        };
        let tag = match case {
            Some(8) | None => Some(NO_GUARANTEE),
            _ => None,
        };
        Guarantee {
            case,
            factor,
            algorithm,
            tag,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use approx::assert_relative_eq;

    use super::*;
    use crate::functions::{Continuity, DisparityMin, FacilityLocation, GraphCut, Modular};
    use crate::kernels::SimilarityMatrix;

    fn sim() -> Arc<SimilarityMatrix> {
        Arc::new(SimilarityMatrix::identity(4))
    }

    #[test]
    fn mixture_value_and_gains() {
        let mut m = ObjectiveMixture::new(4)
            .with(FacilityLocation::new("fl", sim()), 2.0)
            .unwrap()
            .with(Modular::new("m", vec![1.0, -1.0, 0.5, 0.0]), -1.0)
            .unwrap();
        assert_relative_eq!(m.evaluate(&[0, 1]), 2.0 * 2.0 - 0.0);
        let g = m.gain(2);
        m.insert(0);
        let before = m.value();
        let g2 = m.gain(2);
        m.insert(2);
        assert_relative_eq!(g, 2.0 - 0.5);
        assert_relative_eq!(m.value() - before, g2);
        assert!(!m.is_monotone());
    }

    #[test]
    fn negative_structured_weight_rejected() {
        assert!(ObjectiveMixture::new(4)
            .with(FacilityLocation::new("fl", sim()), -0.1)
            .is_err());
        assert!(ObjectiveMixture::new(3)
            .with(FacilityLocation::new("fl", sim()), 1.0)
            .is_err());
    }

    #[test]
    fn weight_patterns_map_to_cases() {
        let shots = [(0, 4)];
        let d = Arc::new(sim().to_distances());
        let case = |m: ObjectiveMixture| m.guarantee().case;
        let base = || ObjectiveMixture::new(4);
        assert_eq!(
            case(base().with(FacilityLocation::new("f", sim()), 1.0).unwrap()),
            Some(1)
        );
        assert_eq!(
            case(base().with(DisparityMin::new("d", d.clone()), 1.0).unwrap()),
            Some(2)
        );
        assert_eq!(case(base().with(GraphCut::new("g", sim(), 0.9), 1.0).unwrap()), Some(3));
        let c4 = base()
            .with(FacilityLocation::new("f", sim()), 1.0)
            .unwrap()
            .with(DisparityMin::new("d", d.clone()), 1.0)
            .unwrap();
        assert_eq!(case(c4), Some(4));
        let c5 = base()
            .with(GraphCut::new("g", sim(), 0.9), 1.0)
            .unwrap()
            .with(DisparityMin::new("d", d.clone()), 1.0)
            .unwrap();
        assert_eq!(case(c5), Some(5));
        let c6 = base()
            .with(FacilityLocation::new("f", sim()), 1.0)
            .unwrap()
            .with(Continuity::new("c", &shots), 1.0)
            .unwrap();
        assert_eq!(case(c6), Some(6));
        let c8 = base()
            .with(GraphCut::new("g", sim(), 0.9), 1.0)
            .unwrap()
            .with(Continuity::new("c", &shots), 1.0)
            .unwrap();
        let g = c8.guarantee();
        assert_eq!(g.case, Some(8));
        assert_eq!(g.tag, Some(NO_GUARANTEE));
        let zero_sup = base()
            .with(FacilityLocation::new("f", sim()), 1.0)
            .unwrap()
            .with(Continuity::new("c", &shots), 0.0)
            .unwrap();
        assert_eq!(case(zero_sup), Some(1));
    }
}
