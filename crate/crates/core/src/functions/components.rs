//! The structured components and their incremental state.

use std::sync::Arc;

use super::{Membership, SetFunction, Shape};
use crate::kernels::{index_proximity_weights, ConceptMatrix, DistanceMatrix, SimilarityMatrix};

/// `Σ_u min(m_u(X), 1)` with `m_u(X) = Σ_{x∈X} w_xu`.
pub fn eval_set_cover(concepts: &ConceptMatrix, set: &[usize]) -> f64 {
    let mut cover = vec![0.0; concepts.n_concepts()];
    for &x in set {
        for (c, w) in cover.iter_mut().zip(concepts.row(x)) {
            *c += w;
        }
    }
    cover.iter().map(|c| c.min(1.0)).sum()
}

/// `Σ_u (1 − Π_{x∈X} (1 − p_xu))`.
pub fn eval_prob_set_cover(concepts: &ConceptMatrix, set: &[usize]) -> f64 {
    let mut miss = vec![1.0; concepts.n_concepts()];
    for &x in set {
        for (m, p) in miss.iter_mut().zip(concepts.row(x)) {
            *m *= 1.0 - p;
        }
    }
    miss.iter().map(|m| 1.0 - m).sum()
}

/// `Σ_{v∈V} max_{x∈X} sim(v, x)`, zero for the empty set.
pub fn eval_facility_location(sim: &SimilarityMatrix, set: &[usize]) -> f64 {
    (0..sim.n())
        .map(|v| set.iter().map(|&x| sim.get(v, x)).fold(0.0, f64::max))
        .sum()
}

/// `Σ_{v∈V} min(m_v(X), c_v)` with `m_v(X) = Σ_{x∈X} sim(v, x)`.
pub fn eval_saturated_coverage(sim: &SimilarityMatrix, caps: &[f64], set: &[usize]) -> f64 {
    (0..sim.n())
        .map(|v| set.iter().map(|&x| sim.get(v, x)).sum::<f64>().min(caps[v]))
        .sum()
}

/// `Σ_{i∈V, j∈X} sim(i, j) − λ Σ_{i,j∈X} sim(i, j)`, ordered pairs with `i = j`
/// included.
pub fn eval_graph_cut(sim: &SimilarityMatrix, set: &[usize], lambda: f64) -> f64 {
    let cover: f64 = set.iter().map(|&j| sim.row(j).iter().sum::<f64>()).sum();
    let within: f64 = set
        .iter()
        .map(|&i| set.iter().map(|&j| sim.get(i, j)).sum::<f64>())
        .sum();
    cover - lambda * within
}

/// Minimum pairwise distance for two or more items, the largest distance in
/// the ground set for a singleton and 0 for the empty set.
pub fn eval_disparity_min(dist: &DistanceMatrix, set: &[usize]) -> f64 {
    match set.len() {
        0 => 0.0,
        1 => dist.max_pairwise(),
        _ => dist.min_pairwise(set).unwrap_or(0.0),
    }
}

/// Sum of `1/(1 + |i − j|)` over unordered same-shot pairs in the set.
pub fn eval_continuity(shot_of: &[usize], set: &[usize]) -> f64 {
    let mut total = 0.0;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            total += index_proximity_weights(shot_of, i, j);
        }
    }
    total
}

macro_rules! selection_accessors {
    () => {
        fn selected(&self) -> &[usize] {
            self.members.order()
        }

        fn is_selected(&self, e: usize) -> bool {
            self.members.contains(e)
        }

        fn value(&self) -> f64 {
            self.value
        }

        fn box_clone(&self) -> Box<dyn SetFunction> {
            Box::new(self.clone())
        }
    };
}

#[derive(Debug, Clone)]
pub struct SetCover {
    name: String,
    concepts: Arc<ConceptMatrix>,
    cover: Vec<f64>,
    members: Membership,
    value: f64,
}

impl SetCover {
    pub fn new(name: impl Into<String>, concepts: Arc<ConceptMatrix>) -> Self {
        SetCover {
            name: name.into(),
            cover: vec![0.0; concepts.n_concepts()],
            members: Membership::new(concepts.n()),
            concepts,
            value: 0.0,
        }
    }
}

impl SetFunction for SetCover {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn ground_size(&self) -> usize {
        self.concepts.n()
    }

    fn shape(&self) -> Shape {
        Shape::MonotoneSubmodular
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        eval_set_cover(&self.concepts, set)
    }

    fn gain(&self, e: usize) -> f64 {
        self.cover
            .iter()
            .zip(self.concepts.row(e))
            .map(|(m, w)| w.min((1.0 - m).max(0.0)))
            .sum()
    }

    fn insert(&mut self, e: usize) {
        self.value += self.gain(e);
        for (m, w) in self.cover.iter_mut().zip(self.concepts.row(e)) {
            *m += w;
        }
        self.members.insert(e);
    }

    fn reset(&mut self) {
        self.cover.fill(0.0);
        self.members.clear();
        self.value = 0.0;
    }

    selection_accessors!();
}

#[derive(Debug, Clone)]
pub struct ProbSetCover {
    name: String,
    concepts: Arc<ConceptMatrix>,
    miss: Vec<f64>,
    members: Membership,
    value: f64,
}

impl ProbSetCover {
    pub fn new(name: impl Into<String>, concepts: Arc<ConceptMatrix>) -> Self {
        ProbSetCover {
            name: name.into(),
            miss: vec![1.0; concepts.n_concepts()],
            members: Membership::new(concepts.n()),
            concepts,
            value: 0.0,
        }
    }
}

impl SetFunction for ProbSetCover {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn ground_size(&self) -> usize {
        self.concepts.n()
    }

    fn shape(&self) -> Shape {
        Shape::MonotoneSubmodular
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        eval_prob_set_cover(&self.concepts, set)
    }

    fn gain(&self, e: usize) -> f64 {
        self.miss.iter().zip(self.concepts.row(e)).map(|(m, p)| m * p).sum()
    }

    fn insert(&mut self, e: usize) {
        self.value += self.gain(e);
        for (m, p) in self.miss.iter_mut().zip(self.concepts.row(e)) {
            *m *= 1.0 - p;
        }
        self.members.insert(e);
    }

    fn reset(&mut self) {
        self.miss.fill(1.0);
        self.members.clear();
        self.value = 0.0;
    }

    selection_accessors!();
}

#[derive(Debug, Clone)]
pub struct FacilityLocation {
    name: String,
    sim: Arc<SimilarityMatrix>,
    best: Vec<f64>,
    members: Membership,
    value: f64,
}

impl FacilityLocation {
    pub fn new(name: impl Into<String>, sim: Arc<SimilarityMatrix>) -> Self {
        FacilityLocation {
            name: name.into(),
            best: vec![0.0; sim.n()],
            members: Membership::new(sim.n()),
            sim,
            value: 0.0,
        }
    }
}

impl SetFunction for FacilityLocation {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn ground_size(&self) -> usize {
        self.sim.n()
    }

    fn shape(&self) -> Shape {
        Shape::MonotoneSubmodular
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        eval_facility_location(&self.sim, set)
    }

    fn gain(&self, e: usize) -> f64 {
        self.best
            .iter()
            .zip(self.sim.row(e))
            .map(|(b, s)| (s - b).max(0.0))
            .sum()
    }

    fn insert(&mut self, e: usize) {
        self.value += self.gain(e);
        for (b, s) in self.best.iter_mut().zip(self.sim.row(e)) {
            *b = b.max(*s);
        }
        self.members.insert(e);
    }

    fn reset(&mut self) {
        self.best.fill(0.0);
        self.members.clear();
        self.value = 0.0;
    }

    selection_accessors!();
}

#[derive(Debug, Clone)]
pub struct SaturatedCoverage {
    name: String,
    sim: Arc<SimilarityMatrix>,
    caps: Arc<Vec<f64>>,
    mass: Vec<f64>,
    members: Membership,
    value: f64,
}

impl SaturatedCoverage {
    /// Saturation `c_v = fraction × Σ_{x∈V} sim(v, x)`.
    pub fn new(name: impl Into<String>, sim: Arc<SimilarityMatrix>, fraction: f64) -> Self {
        let caps = (0..sim.n())
            .map(|v| fraction * sim.row(v).iter().sum::<f64>())
            .collect();
        SaturatedCoverage {
            name: name.into(),
            caps: Arc::new(caps),
            mass: vec![0.0; sim.n()],
            members: Membership::new(sim.n()),
            sim,
            value: 0.0,
        }
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }
}

impl SetFunction for SaturatedCoverage {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn ground_size(&self) -> usize {
        self.sim.n()
    }

    fn shape(&self) -> Shape {
        Shape::MonotoneSubmodular
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        eval_saturated_coverage(&self.sim, &self.caps, set)
    }

    fn gain(&self, e: usize) -> f64 {
        self.mass
            .iter()
            .zip(self.caps.iter())
            .zip(self.sim.row(e))
            .map(|((m, c), s)| s.min((c - m).max(0.0)))
            .sum()
    }

    fn insert(&mut self, e: usize) {
        self.value += self.gain(e);
        for (m, s) in self.mass.iter_mut().zip(self.sim.row(e)) {
            *m += s;
        }
        self.members.insert(e);
    }

    fn reset(&mut self) {
        self.mass.fill(0.0);
        self.members.clear();
        self.value = 0.0;
    }

    selection_accessors!();
}

#[derive(Debug, Clone)]
pub struct GraphCut {
    name: String,
    sim: Arc<SimilarityMatrix>,
    lambda: f64,
    column: Arc<Vec<f64>>,
    /// `Σ_{j∈X} sim(e, j)` for every `e`.
    inner: Vec<f64>,
    members: Membership,
    value: f64,
}

impl GraphCut {
    pub fn new(name: impl Into<String>, sim: Arc<SimilarityMatrix>, lambda: f64) -> Self {
        let column = (0..sim.n()).map(|j| sim.row(j).iter().sum()).collect();
        GraphCut {
            name: name.into(),
            lambda,
            column: Arc::new(column),
            inner: vec![0.0; sim.n()],
            members: Membership::new(sim.n()),
            sim,
            value: 0.0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl SetFunction for GraphCut {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn ground_size(&self) -> usize {
        self.sim.n()
    }

    fn shape(&self) -> Shape {
        // Similarities lie in [0, 1] with a unit diagonal, so every gain is at
        // least (1 − 2λ)·colsum + λ.
        if self.lambda <= 0.5 {
            Shape::MonotoneSubmodular
        } else {
            Shape::Submodular
        }
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        eval_graph_cut(&self.sim, set, self.lambda)
    }

    fn gain(&self, e: usize) -> f64 {
        self.column[e] - self.lambda * (2.0 * self.inner[e] + self.sim.get(e, e))
    }

    fn insert(&mut self, e: usize) {
        self.value += self.gain(e);
        for (acc, s) in self.inner.iter_mut().zip(self.sim.row(e)) {
            *acc += s;
        }
        self.members.insert(e);
    }

    fn reset(&mut self) {
        self.inner.fill(0.0);
        self.members.clear();
        self.value = 0.0;
    }

    selection_accessors!();
}

#[derive(Debug, Clone)]
pub struct DisparityMin {
    name: String,
    dist: Arc<DistanceMatrix>,
    max_distance: f64,
    /// Distance from every element to its nearest selected element.
    nearest: Vec<f64>,
    members: Membership,
    value: f64,
}

impl DisparityMin {
    pub fn new(name: impl Into<String>, dist: Arc<DistanceMatrix>) -> Self {
        DisparityMin {
            name: name.into(),
            max_distance: dist.max_pairwise(),
            nearest: vec![f64::INFINITY; dist.n()],
            members: Membership::new(dist.n()),
            dist,
            value: 0.0,
        }
    }
}

impl SetFunction for DisparityMin {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn ground_size(&self) -> usize {
        self.dist.n()
    }

    fn shape(&self) -> Shape {
        Shape::Dispersion
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        eval_disparity_min(&self.dist, set)
    }

    fn gain(&self, e: usize) -> f64 {
        match self.members.len() {
            0 => self.max_distance,
            1 => self.nearest[e] - self.max_distance,
            _ => self.nearest[e].min(self.value) - self.value,
        }
    }

    fn insert(&mut self, e: usize) {
        self.value = match self.members.len() {
            0 => self.max_distance,
            1 => self.nearest[e],
            _ => self.value.min(self.nearest[e]),
        };
        for (v, near) in self.nearest.iter_mut().enumerate() {
            *near = near.min(self.dist.get(v, e));
        }
        self.members.insert(e);
    }

    fn reset(&mut self) {
        self.nearest.fill(f64::INFINITY);
        self.members.clear();
        self.value = 0.0;
    }

    fn distances(&self) -> Option<&DistanceMatrix> {
        Some(&self.dist)
    }

    selection_accessors!();
}

#[derive(Debug, Clone)]
pub struct Continuity {
    name: String,
    shot_of: Arc<Vec<usize>>,
    shot_bounds: Arc<Vec<(usize, usize)>>,
    /// `Σ_{x∈X} w(e, x)` for every `e`.
    pull: Vec<f64>,
    members: Membership,
    value: f64,
}

impl Continuity {
    /// `shots` must partition `0..n` into consecutive half-open ranges.
    pub fn new(name: impl Into<String>, shots: &[(usize, usize)]) -> Self {
        let n = shots.last().map_or(0, |s| s.1);
        let mut shot_of = vec![0; n];
        for (k, &(a, b)) in shots.iter().enumerate() {
            shot_of[a..b].fill(k);
        }
        Continuity {
            name: name.into(),
            shot_of: Arc::new(shot_of),
            shot_bounds: Arc::new(shots.to_vec()),
            pull: vec![0.0; n],
            members: Membership::new(n),
            value: 0.0,
        }
    }
}

impl SetFunction for Continuity {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn ground_size(&self) -> usize {
        self.shot_of.len()
    }

    fn shape(&self) -> Shape {
        Shape::MonotoneSupermodular
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        eval_continuity(&self.shot_of, set)
    }

    fn gain(&self, e: usize) -> f64 {
        self.pull[e]
    }

    fn insert(&mut self, e: usize) {
        self.value += self.pull[e];
        let (a, b) = self.shot_bounds[self.shot_of[e]];
        for j in a..b {
            if j != e {
                self.pull[j] += 1.0 / (1.0 + j.abs_diff(e) as f64);
            }
        }
        self.members.insert(e);
    }

    fn reset(&mut self) {
        self.pull.fill(0.0);
        self.members.clear();
        self.value = 0.0;
    }

    selection_accessors!();
}

/// `Σ_{x∈X} score(x)`.
#[derive(Debug, Clone)]
pub struct Modular {
    name: String,
    scores: Arc<Vec<f64>>,
    members: Membership,
    value: f64,
}

impl Modular {
    pub fn new(name: impl Into<String>, scores: Vec<f64>) -> Self {
        Modular {
            name: name.into(),
            members: Membership::new(scores.len()),
            scores: Arc::new(scores),
            value: 0.0,
        }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

impl SetFunction for Modular {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn ground_size(&self) -> usize {
        self.scores.len()
    }

    fn shape(&self) -> Shape {
        Shape::Modular
    }

    fn is_monotone(&self) -> bool {
        self.scores.iter().all(|&s| s >= 0.0)
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.scores[x]).sum()
    }

    fn gain(&self, e: usize) -> f64 {
        self.scores[e]
    }

    fn insert(&mut self, e: usize) {
        self.value += self.scores[e];
        self.members.insert(e);
    }

    fn reset(&mut self) {
        self.members.clear();
        self.value = 0.0;
    }

    selection_accessors!();
}
