//! Set-function components of the summary objective.
//!
//! Every component is bound to one video's ground set and keeps the cached
//! statistics needed for incremental marginal gains. [`SetFunction::evaluate`]
//! is a pure function of its argument; [`SetFunction::gain`] and
//! [`SetFunction::insert`] work against the internally selected set.

mod components;
mod grid;
mod modular;

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::kernels::DistanceMatrix;

pub use components::{
    eval_continuity, eval_disparity_min, eval_facility_location, eval_graph_cut, eval_prob_set_cover,
    eval_saturated_coverage, eval_set_cover, Continuity, DisparityMin, FacilityLocation, GraphCut, Modular,
    ProbSetCover, SaturatedCoverage, SetCover,
};
pub use grid::{
    ComponentInstance, ComponentKind, ComponentSpec, GridConfig, Hyperparams, InstanceBuilder,
    DEFAULT_GRAPH_CUT_LAMBDA, DEFAULT_SATCOV_FRACTION, INDICES_SOURCE,
};
pub use modular::{eval_modular, ModularFeatures, ALL_FEATURES};

/// Structural class of a set function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Modular,
    MonotoneSubmodular,
    Submodular,
    MonotoneSupermodular,
    Supermodular,
    /// Max-min diversity (disparity-min).
    Dispersion,
    General,
}

impl Shape {
    pub fn is_submodular(self) -> bool {
        matches!(self, Shape::Modular | Shape::MonotoneSubmodular | Shape::Submodular)
    }

    pub fn is_supermodular(self) -> bool {
        matches!(self, Shape::Modular | Shape::MonotoneSupermodular | Shape::Supermodular)
    }

    pub fn is_monotone(self) -> bool {
        matches!(self, Shape::MonotoneSubmodular | Shape::MonotoneSupermodular)
    }
}

/// A set function over `{0, …, n−1}` with an internal selected set.
pub trait SetFunction: Debug + Send + Sync {
    fn name(&self) -> String;

    fn ground_size(&self) -> usize;

    fn shape(&self) -> Shape;

    fn is_monotone(&self) -> bool {
        self.shape().is_monotone()
    }

    /// `f(set)` from scratch; ignores the internal state.
    fn evaluate(&self, set: &[usize]) -> f64;

    fn selected(&self) -> &[usize];

    fn is_selected(&self, e: usize) -> bool;

    /// `f(selected)`.
    fn value(&self) -> f64;

    /// `f(selected ∪ {e}) − f(selected)` for `e` not selected.
    fn gain(&self, e: usize) -> f64;

    /// Adds `e` to the selected set. `e` must not be selected.
    fn insert(&mut self, e: usize);

    /// Restores the empty-set state.
    fn reset(&mut self);

    /// Pairwise distances, for dispersion components.
    fn distances(&self) -> Option<&DistanceMatrix> {
        None
    }

    fn box_clone(&self) -> Box<dyn SetFunction>;

    /// Checked [`SetFunction::gain`].
    fn marginal_gain(&self, e: usize) -> Result<f64> {
        self.check_new(e)?;
        Ok(self.gain(e))
    }

    /// Checked [`SetFunction::insert`].
    fn try_insert(&mut self, e: usize) -> Result<()> {
        self.check_new(e)?;
        self.insert(e);
        Ok(())
    }

    fn check_new(&self, e: usize) -> Result<()> {
        let n = self.ground_size();
        if e >= n {
            return Err(Error::OutOfRange { element: e, n });
        }
        if self.is_selected(e) {
            return Err(Error::AlreadySelected(e));
        }
        Ok(())
    }
}

impl Clone for Box<dyn SetFunction> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// Selected-set bookkeeping: insertion order plus O(1) membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    flags: Vec<bool>,
    order: Vec<usize>,
}

impl Membership {
    pub fn new(n: usize) -> Self {
        Membership {
            flags: vec![false; n],
            order: Vec::new(),
        }
    }

    pub fn insert(&mut self, e: usize) {
        debug_assert!(!self.flags[e], "{e} inserted twice");
        self.flags[e] = true;
        self.order.push(e);
    }

    #[inline]
    pub fn contains(&self, e: usize) -> bool {
        self.flags[e]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn clear(&mut self) {
        for &e in &self.order {
            self.flags[e] = false;
        }
        self.order.clear();
    }
}
