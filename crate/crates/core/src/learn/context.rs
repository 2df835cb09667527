//! Per-video state for training and inference.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::MixtureModel;
use crate::corpus::{budget_in_snippets, AnnotatedVideo, Summary};
use crate::error::{Error, Result};
use crate::functions::{ComponentInstance, GridConfig, InstanceBuilder, Modular, ModularFeatures, SetFunction};
use crate::gtgen::{generate_from_context, GroundTruthPool};
use crate::measure::{MarginTerm, MeasureParams, ScoreBounds, ScoreContext};
use crate::optimize::{
    dispersion_greedy_max, greedy_max_with, split_greedy_max, GreedyOptions, ObjectiveMixture, Selection,
};

/// One video bound to a component grid at a fixed budget.
#[derive(Debug, Clone)]
pub struct VideoContext {
    pub video_id: String,
    pub domain: Option<String>,
    pub n: usize,
    pub budget: usize,
    pub phi: ModularFeatures,
    pub components: Vec<ComponentInstance>,
    /// Divisor of the summed modular rows: the budget.
    pub modular_scale: f64,
    /// Per-component divisor applied to component values; see [`component_scales`].
    pub scales: Vec<f64>,
    pub score: Arc<ScoreContext>,
    pub bounds: ScoreBounds,
    pub pool: Option<GroundTruthPool>,
}

impl VideoContext {
    pub fn new(video: &AnnotatedVideo, grid: &GridConfig, budget_pct: f64, params: MeasureParams) -> Result<Self> {
        let budget = budget_in_snippets(video, budget_pct)?;
        Self::with_budget(video, grid, budget, params)
    }

    pub fn with_budget(
        video: &AnnotatedVideo,
        grid: &GridConfig,
        budget: usize,
        params: MeasureParams,
    ) -> Result<Self> {
        let phi = ModularFeatures::from_video(video, &grid.modular_sources())?;
        let components = InstanceBuilder::new(video).build_all(grid)?;
        let scales = component_scales(&components, video.n_snippets, budget);
        let score = Arc::new(ScoreContext::new(video, params)?);
        let bounds = ScoreBounds::for_context(&score, budget)?;
        Ok(VideoContext {
            video_id: video.id.clone(),
            domain: video.domain.clone(),
            n: video.n_snippets,
            budget,
            phi,
            components,
            modular_scale: budget.max(1) as f64,
            scales,
            score,
            bounds,
            pool: None,
        })
    }

    /// Attaches a ground-truth pool for the context's budget.
    pub fn with_pool(mut self, max_gt: usize, seed: u64) -> Result<Self> {
        self.pool = Some(generate_from_context(
            &self.score,
            &self.video_id,
            self.budget,
            max_gt,
            seed,
        )?);
        Ok(self)
    }

    /// Length of `[w1 ; w2]`.
    pub fn weight_dim(&self) -> usize {
        self.phi.dim() + self.components.len()
    }

    /// The joint feature vector `[Σ_{s∈set} φ(s) ; f_1(set), …, f_m(set)]`.
    pub fn features(&self, set: &[usize]) -> Vec<f64> {
        let mut f: Vec<f64> = self.phi.sum_rows(set).iter().map(|v| v / self.modular_scale).collect();
        f.extend(
            self.components
                .iter()
                .zip(&self.scales)
                .map(|(c, s)| c.evaluate(set) / s),
        );
        f
    }

    fn check_weights(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.weight_dim() {
            return Err(Error::ModelMismatch(format!(
                "{} weights for {} features on video {}",
                w.len(),
                self.weight_dim(),
                self.video_id
            )));
        }
        Ok(())
    }

    /// Checks that `model` was trained on this context's feature layout.
    pub fn check_model(&self, model: &MixtureModel) -> Result<()> {
        let families: Vec<(String, usize)> = model.w1.iter().map(|f| (f.family.clone(), f.weights.len())).collect();
        if families != self.phi.families {
            return Err(Error::ModelMismatch(format!(
                "model families {families:?} differ from video {} families {:?}",
                self.video_id, self.phi.families
            )));
        }
        let ids: Vec<String> = self.components.iter().map(|c| c.id()).collect();
        let model_ids: Vec<&String> = model.w2.iter().map(|c| &c.id).collect();
        if ids.iter().collect::<Vec<_>>() != model_ids {
            return Err(Error::ModelMismatch(format!(
                "model components {model_ids:?} differ from video {} components {ids:?}",
                self.video_id
            )));
        }
        Ok(())
    }

    /// `w · f(x, ·)` as an objective.
    pub fn mixture(&self, w: &[f64]) -> Result<ObjectiveMixture> {
        self.check_weights(w)?;
        let d = self.phi.dim();
        let mut obj = ObjectiveMixture::new(self.n);
        obj.push(
            Box::new(Modular::new("modular", self.phi.scores(&w[..d])?)),
            1.0 / self.modular_scale,
        )?;
        for ((c, &wi), s) in self.components.iter().zip(&w[d..]).zip(&self.scales) {
            obj.push(Box::new(c.clone()), wi / s)?;
        }
        Ok(obj)
    }

    pub fn value(&self, w: &[f64], set: &[usize]) -> Result<f64> {
        self.check_weights(w)?;
        Ok(dot(w, &self.features(set)))
    }

    /// Clipped margin `1 − normalized S_V(set)`.
    pub fn margin(&self, set: &[usize]) -> f64 {
        self.bounds.loss(self.score.score(set))
    }
}

const SCALE_SAMPLES: usize = 32;
const SCALE_SEED: u64 = 0x5CA1E;

/// Spread of each component over summaries of `budget` snippets: its greedy
/// maximum minus its mean over seeded random summaries, or 1 where that
/// spread vanishes.
pub fn component_scales(components: &[ComponentInstance], n: usize, budget: usize) -> Vec<f64> {
    let k = budget.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(SCALE_SEED);
    let sets: Vec<Vec<usize>> = (0..SCALE_SAMPLES)
        .map(|_| rand::seq::index::sample(&mut rng, n, k).into_vec())
        .collect();
    components
        .par_iter()
        .map(|c| {
            let mean = sets.iter().map(|s| c.evaluate(s)).sum::<f64>() / sets.len() as f64;
            let best = component_maximum(c, n, k).unwrap_or(mean);
            let spread = best - mean;
            if spread > 1e-6 * mean.abs().max(1.0) {
                spread
            } else {
                1.0
            }
        })
        .collect()
}

fn component_maximum(c: &ComponentInstance, n: usize, k: usize) -> Option<f64> {
    if k == 0 {
        return None;
    }
    let sel = match c.distances() {
        Some(d) if k >= 2 => dispersion_greedy_max(d, k).ok()?,
        Some(_) => return None,
        None => {
            let mut obj = ObjectiveMixture::new(n);
            obj.push(Box::new(c.clone()), 1.0).ok()?;
            greedy_max_with(
                &obj,
                k,
                GreedyOptions {
                    lazy: true,
                    fill_budget: true,
                },
            )
            .ok()?
        }
    };
    Some(c.evaluate(&sel.elements))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `w1 · Σ φ(x) + Σ_i w2_i f_i(X)` for a trained model.
pub fn mixture_value(model: &MixtureModel, ctx: &VideoContext, set: &[usize]) -> Result<f64> {
    ctx.check_model(model)?;
    ctx.value(&model.weights(), set)
}

fn fill(k: usize) -> impl Fn(&ObjectiveMixture) -> Result<Selection> {
    move |obj| {
        split_greedy_max(
            obj,
            k,
            GreedyOptions {
                lazy: true,
                fill_budget: true,
            },
        )
    }
}

/// Greedy maximizer of `w · f(x, y) + margin(y)` over `|y| = budget`.
pub fn loss_augmented_infer(w: &[f64], ctx: &VideoContext) -> Result<Selection> {
    loss_augmented_infer_scaled(w, ctx, 1.0)
}

/// As [`loss_augmented_infer`] with the margin multiplied by `margin_scale`.
pub fn loss_augmented_infer_scaled(w: &[f64], ctx: &VideoContext, margin_scale: f64) -> Result<Selection> {
    let mut obj = ctx.mixture(w)?;
    obj.push(Box::new(MarginTerm::new(ctx.score.clone(), ctx.bounds)), margin_scale)?;
    fill(ctx.budget)(&obj)
}

/// Parts of one generalized hinge-loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct HingeBreakdown {
    /// `max(raw, 0)`.
    pub value: f64,
    /// `w·f(ŷ) + margin(ŷ) − w·f(y_gt)`.
    pub raw: f64,
    /// `raw < 0`: greedy found a summary scoring below the ground truth.
    pub clamped: bool,
    pub predicted: Vec<usize>,
    pub model_predicted: f64,
    pub margin_predicted: f64,
    pub model_gt: f64,
    pub features_predicted: Vec<f64>,
    pub features_gt: Vec<f64>,
}

pub fn hinge_loss(w: &[f64], ctx: &VideoContext, gt: &[usize]) -> Result<HingeBreakdown> {
    let predicted = loss_augmented_infer(w, ctx)?.sorted();
    let features_predicted = ctx.features(&predicted);
    let features_gt = ctx.features(gt);
    let model_predicted = dot(w, &features_predicted);
    let model_gt = dot(w, &features_gt);
    let margin_predicted = ctx.margin(&predicted);
    let raw = model_predicted + margin_predicted - model_gt;
    Ok(HingeBreakdown {
        value: raw.max(0.0),
        raw,
        clamped: raw < 0.0,
        predicted,
        model_predicted,
        margin_predicted,
        model_gt,
        features_predicted,
        features_gt,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentContribution {
    pub id: String,
    pub weight: f64,
    /// Component value divided by the context's scale.
    pub value: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub video_id: String,
    pub budget_snippets: usize,
    pub score: f64,
    pub normalized_score: f64,
    pub score_loss: f64,
    pub objective: f64,
    pub modular_contribution: f64,
    pub components: Vec<ComponentContribution>,
}

/// Greedy inference with a trained weight vector, filling the budget.
pub fn summarize_with_context(w: &[f64], ctx: &VideoContext) -> Result<(Summary, SummaryReport)> {
    let obj = ctx.mixture(w)?;
    let sel = fill(ctx.budget)(&obj)?;
    let summary = sel.to_summary(ctx.video_id.clone());
    let set = &summary.snippet_indices;
    let d = ctx.phi.dim();
    let modular = dot(&w[..d], &ctx.phi.sum_rows(set)) / ctx.modular_scale;
    let components: Vec<ComponentContribution> = ctx
        .components
        .iter()
        .zip(&w[d..])
        .enumerate()
        .map(|(i, (c, &weight))| {
            let value = c.evaluate(set) / ctx.scales[i];
            ComponentContribution {
                id: c.id(),
                weight,
                value,
                weighted: weight * value,
            }
        })
        .collect();
    let score = ctx.score.score(set);
    let normalized = ctx.bounds.normalize(score);
    let report = SummaryReport {
        video_id: ctx.video_id.clone(),
        budget_snippets: ctx.budget,
        score,
        normalized_score: normalized,
        score_loss: 1.0 - normalized,
        objective: modular + components.iter().map(|c| c.weighted).sum::<f64>(),
        modular_contribution: modular,
        components,
    };
    Ok((summary, report))
}

pub fn summarize_video(
    model: &MixtureModel,
    video: &AnnotatedVideo,
    budget_pct: f64,
    params: MeasureParams,
) -> Result<(Summary, SummaryReport)> {
    let ctx = VideoContext::new(video, &model.grid(), budget_pct, params)?;
    ctx.check_model(model)?;
    summarize_with_context(&model.weights(), &ctx)
}
