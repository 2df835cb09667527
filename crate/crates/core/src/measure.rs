//! Ratings-based summary score `S_V`, its min-max normalization and the
//! training margin.
//!
//! For a rasterized video with segments `x_i` and `t_i = |y ∩ x_i|`:
//!
//! ```text
//! S_V(y) =   Σ_{x_i ∈ P} t_i (1 + t_i/|x_i|) e^{α r_i}
//!          + Σ_{x_i ∈ R} m_i (1 + m_i/min(|x_i|, β)) e^{α r_i},   m_i = min(t_i, β)
//!          − Σ_{x_i ∈ N} k t_i
//! ```
//!
//! `P` holds non-repetitive segments rated ≥ 0, `R` repetitive ones rated ≥ 0
//! and `N` the negatively rated segments.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedVideo, Raster, RasterSegment, Summary};
use crate::error::{Error, Result};
use crate::functions::{Membership, SetFunction, Shape};
use crate::gtgen;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureParams {
    /// Reward scaling, `α > 0`.
    pub alpha: f64,
    /// Repetitiveness cut-off in seconds.
    pub beta_sec: f64,
    /// Per-snippet penalty for negative segments.
    pub penalty_k: f64,
}

impl Default for MeasureParams {
    fn default() -> Self {
        MeasureParams {
            alpha: 1.0,
            beta_sec: 6.0,
            penalty_k: 2.0,
        }
    }
}

impl MeasureParams {
    pub fn new(alpha: f64, beta_sec: f64, penalty_k: f64) -> Result<Self> {
        let p = MeasureParams {
            alpha,
            beta_sec,
            penalty_k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta_sec", self.beta_sec),
            ("penalty_k", self.penalty_k),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `β` in snippets: `round(beta_sec / snippet_seconds)`, at least 1.
    pub fn beta_snips(&self, snippet_seconds: f64) -> usize {
        ((self.beta_sec / snippet_seconds).round() as usize).max(1)
    }
}

/// Per-video scoring state: the raster, `β` in snippets and the reward
/// factor `e^{α r}` of every segment.
#[derive(Debug, Clone)]
pub struct ScoreContext {
    pub raster: Raster,
    pub params: MeasureParams,
    pub beta: usize,
    factors: Vec<f64>,
}

impl ScoreContext {
    pub fn new(video: &AnnotatedVideo, params: MeasureParams) -> Result<Self> {
        params.validate()?;
        Ok(Self::from_raster(
            video.rasterize(),
            params,
            params.beta_snips(video.snippet_seconds),
        ))
    }

    pub fn from_raster(raster: Raster, params: MeasureParams, beta: usize) -> Self {
        let factors = raster
            .segments
            .iter()
            .map(|s| (params.alpha * f64::from(s.rating)).exp())
            .collect();
        ScoreContext {
            raster,
            params,
            beta: beta.max(1),
            factors,
        }
    }

    pub fn n_snippets(&self) -> usize {
        self.raster.n_snippets()
    }

    pub fn segments(&self) -> &[RasterSegment] {
        &self.raster.segments
    }

    /// Contribution of segment `seg` when `t` of its snippets are selected.
    pub fn segment_term(&self, seg: usize, t: usize) -> f64 {
        let s = &self.raster.segments[seg];
        let t = t as f64;
        if s.rating < 0 {
            -self.params.penalty_k * t
        } else if s.repetitive {
            let cap = self.beta.min(s.len()) as f64;
            let m = t.min(self.beta as f64);
            m * (1.0 + m / cap) * self.factors[seg]
        } else {
            t * (1.0 + t / s.len() as f64) * self.factors[seg]
        }
    }

    pub fn counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.raster.segments.len()];
        for &i in indices {
            counts[self.raster.segment_of[i]] += 1;
        }
        counts
    }

    pub fn score_counts(&self, counts: &[usize]) -> f64 {
        counts
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0)
            .map(|(seg, &t)| self.segment_term(seg, t))
            .sum()
    }

    pub fn score(&self, indices: &[usize]) -> f64 {
        self.score_counts(&self.counts(indices))
    }

    /// Splits `S_V` into a submodular and a supermodular part that sum to it.
    ///
    /// Repetitive terms `e^{αr}(m + m²/c)` are written as
    /// `e^{αr}[m − (t² − m²)/c] + e^{αr} t²/c` with `t² − m² = max(t² − β², 0)`;
    /// the first bracket is concave in `t`, the second convex.
    pub fn decompose(&self, indices: &[usize]) -> (f64, f64) {
        let counts = self.counts(indices);
        let (mut sub, mut sup) = (0.0, 0.0);
        for (seg, &t) in counts.iter().enumerate() {
            if t == 0 {
                continue;
            }
            let s = &self.raster.segments[seg];
            let tf = t as f64;
            if s.rating < 0 {
                sub -= self.params.penalty_k * tf;
            } else if s.repetitive {
                let b = self.beta as f64;
                let cap = self.beta.min(s.len()) as f64;
                let f = self.factors[seg];
                sub += f * (tf.min(b) - (tf * tf - b * b).max(0.0) / cap);
                sup += f * tf * tf / cap;
            } else {
                sup += tf * (1.0 + tf / s.len() as f64) * self.factors[seg];
            }
        }
        (sub, sup)
    }
}

/// `S_V(y)` for a summary of `video`.
pub fn score_summary(video: &AnnotatedVideo, y: &Summary, params: MeasureParams) -> Result<f64> {
    y.check_bounds(video.n_snippets)?;
    Ok(ScoreContext::new(video, params)?.score(&y.snippet_indices))
}

pub fn decompose_score(video: &AnnotatedVideo, y: &Summary, params: MeasureParams) -> Result<(f64, f64)> {
    y.check_bounds(video.n_snippets)?;
    Ok(ScoreContext::new(video, params)?.decompose(&y.snippet_indices))
}

/// Normalization range for one `(video, budget)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBounds {
    /// `−k · budget`: every selected snippet maximally penalized.
    pub s_min: f64,
    /// Score shared by every ground-truth summary at this budget.
    pub s_max: f64,
}

impl ScoreBounds {
    pub fn for_context(ctx: &ScoreContext, budget: usize) -> Result<Self> {
        if budget == 0 || budget > ctx.n_snippets() {
            return Err(Error::Budget {
                budget,
                n: ctx.n_snippets(),
            });
        }
        let s_max = gtgen::ground_truth_score(ctx, budget)?;
        Ok(ScoreBounds {
            s_min: -ctx.params.penalty_k * budget as f64,
            s_max,
        })
    }

    pub fn range(&self) -> f64 {
        self.s_max - self.s_min
    }

    /// Min-max normalized score clipped to `[0, 1]`.
    pub fn normalize(&self, score: f64) -> f64 {
        let range = self.range();
        if range <= 0.0 {
            return if score >= self.s_max { 1.0 } else { 0.0 };
        }
        ((score - self.s_min) / range).clamp(0.0, 1.0)
    }

    /// `1 − normalized`: the training margin and the reported ScoreLoss.
    pub fn loss(&self, score: f64) -> f64 {
        1.0 - self.normalize(score)
    }
}

pub fn score_bounds(video: &AnnotatedVideo, budget: usize, params: MeasureParams) -> Result<ScoreBounds> {
    ScoreBounds::for_context(&ScoreContext::new(video, params)?, budget)
}

pub fn normalized_score(video: &AnnotatedVideo, y: &Summary, budget: usize, params: MeasureParams) -> Result<f64> {
    y.check_bounds(video.n_snippets)?;
    let ctx = ScoreContext::new(video, params)?;
    let bounds = ScoreBounds::for_context(&ctx, budget)?;
    Ok(bounds.normalize(ctx.score(&y.snippet_indices)))
}

pub fn margin_loss(video: &AnnotatedVideo, y: &Summary, budget: usize, params: MeasureParams) -> Result<f64> {
    Ok(1.0 - normalized_score(video, y, budget, params)?)
}

/// The margin `1 − (S_V(y) − s_min)/(s_max − s_min)` as an incremental set
/// function, so loss-augmented inference can add it to a mixture.
///
/// Unlike [`ScoreBounds::loss`] the value is not clipped; clipping would break
/// incremental gains and only matters for scores above the ground truth.
#[derive(Debug, Clone)]
pub struct MarginTerm {
    ctx: Arc<ScoreContext>,
    bounds: ScoreBounds,
    counts: Vec<usize>,
    members: Membership,
    score: f64,
}

impl MarginTerm {
    pub fn new(ctx: Arc<ScoreContext>, bounds: ScoreBounds) -> Self {
        let n = ctx.n_snippets();
        let segs = ctx.raster.segments.len();
        MarginTerm {
            ctx,
            bounds,
            counts: vec![0; segs],
            members: Membership::new(n),
            score: 0.0,
        }
    }

    fn scale(&self) -> f64 {
        let r = self.bounds.range();
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

impl SetFunction for MarginTerm {
    fn name(&self) -> String {
        "margin".into()
    }

    fn ground_size(&self) -> usize {
        self.ctx.n_snippets()
    }

    fn shape(&self) -> Shape {
        Shape::General
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        1.0 - (self.ctx.score(set) - self.bounds.s_min) / self.scale()
    }

    fn selected(&self) -> &[usize] {
        self.members.order()
    }

    fn is_selected(&self, e: usize) -> bool {
        self.members.contains(e)
    }

    fn value(&self) -> f64 {
        1.0 - (self.score - self.bounds.s_min) / self.scale()
    }

    fn gain(&self, e: usize) -> f64 {
        let seg = self.ctx.raster.segment_of[e];
        let t = self.counts[seg];
        -(self.ctx.segment_term(seg, t + 1) - self.ctx.segment_term(seg, t)) / self.scale()
    }

    fn insert(&mut self, e: usize) {
        let seg = self.ctx.raster.segment_of[e];
        let t = self.counts[seg];
        self.score += self.ctx.segment_term(seg, t + 1) - self.ctx.segment_term(seg, t);
        self.counts[seg] += 1;
        self.members.insert(e);
    }

    fn reset(&mut self) {
        self.counts.fill(0);
        self.members.clear();
        self.score = 0.0;
    }

    fn box_clone(&self) -> Box<dyn SetFunction> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::corpus::RasterSegment;

    fn ctx_with(segments: &[(usize, i8, bool)], beta: usize) -> ScoreContext {
        let mut segs = Vec::new();
        let mut segment_of = Vec::new();
        let mut start = 0;
        for (i, &(len, rating, repetitive)) in segments.iter().enumerate() {
            segs.push(RasterSegment {
                start,
                end: start + len,
                rating,
                repetitive,
                filler: false,
            });
            segment_of.extend(std::iter::repeat_n(i, len));
            start += len;
        }
        ScoreContext::from_raster(
            Raster {
                segments: segs,
                segment_of,
            },
            MeasureParams::default(),
            beta,
        )
    }

    #[test]
    fn empty_summary_scores_zero() {
        let ctx = ctx_with(&[(10, 2, false), (4, -1, false)], 3);
        assert_eq!(ctx.score(&[]), 0.0);
        assert_eq!(ctx.decompose(&[]), (0.0, 0.0));
    }

    #[test]
    fn positive_segment_example() {
        let ctx = ctx_with(&[(10, 2, false)], 3);
        let s = ctx.score(&[0, 1, 2, 3, 4]);
        assert_relative_eq!(s, 7.5 * 2f64.exp(), max_relative = 1e-12);
        assert_relative_eq!(s, 55.418, epsilon = 1e-3);
    }

    #[test]
    fn repetitive_segment_example() {
        let ctx = ctx_with(&[(10, 1, true)], 3);
        let s = ctx.score(&[0, 1, 2, 3, 4]);
        assert_relative_eq!(s, 6.0 * 1f64.exp(), max_relative = 1e-12);
        let (sub, sup) = ctx.decompose(&[0, 1, 2, 3, 4]);
        assert_relative_eq!(sub, 1f64.exp() * (3.0 - 16.0 / 3.0), max_relative = 1e-12);
        assert_relative_eq!(sup, 1f64.exp() * 25.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(sub + sup, s, max_relative = 1e-12);
    }

    #[test]
    fn negative_segment_example() {
        let ctx = ctx_with(&[(6, -1, false)], 3);
        assert_eq!(ctx.score(&[0, 1, 2, 3]), -8.0);
    }

    #[test]
    fn beta_in_snippets() {
        let p = MeasureParams::default();
        assert_eq!(p.beta_snips(2.0), 3);
        assert_eq!(p.beta_snips(100.0), 1);
        assert!(MeasureParams::new(0.0, 6.0, 2.0).is_err());
    }

    #[test]
    fn normalization_arithmetic() {
        let b = ScoreBounds {
            s_min: -20.0,
            s_max: 100.0,
        };
        assert_relative_eq!(b.normalize(40.0), 0.5);
        assert_eq!(b.normalize(-20.0), 0.0);
        assert_eq!(b.normalize(100.0), 1.0);
        assert_eq!(b.normalize(1e9), 1.0);
        assert_relative_eq!(b.loss(40.0), 0.5);
        let flat = ScoreBounds { s_min: 0.0, s_max: 0.0 };
        assert_eq!(flat.normalize(0.0), 1.0);
        assert_eq!(flat.normalize(-1.0), 0.0);
    }

    #[test]
    fn margin_term_gains_match_evaluation() {
        let ctx = Arc::new(ctx_with(
            &[(5, 3, false), (6, 1, true), (4, -2, false), (3, 0, false)],
            3,
        ));
        let bounds = ScoreBounds {
            s_min: -10.0,
            s_max: 150.0,
        };
        let mut m = MarginTerm::new(ctx.clone(), bounds);
        let order = [7, 0, 12, 6, 1, 5, 8, 9, 15];
        let mut set = Vec::new();
        for &e in &order {
            let before = m.evaluate(&set);
            let g = m.gain(e);
            set.push(e);
            assert_relative_eq!(before + g, m.evaluate(&set), epsilon = 1e-12);
            m.insert(e);
            assert_relative_eq!(m.value(), m.evaluate(&set), epsilon = 1e-12);
        }
        m.reset();
        assert_relative_eq!(m.value(), 1.0 - 10.0 / 160.0);
    }
}
