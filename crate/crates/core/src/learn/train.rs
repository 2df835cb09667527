//! Subgradient training loop.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::context::{hinge_loss, summarize_with_context, VideoContext};
use super::model::{GtMode, MixtureModel, ModelVariant, OptimizerKind, TrainConfig};
use crate::corpus::AnnotatedVideo;
use crate::error::{Error, Result};
use crate::functions::GridConfig;

const ADAGRAD_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    /// Mean clamped hinge loss over the training videos, per epoch.
    pub epoch_hinge: Vec<f64>,
    /// Mean held-out ScoreLoss after each epoch; `None` without held-out videos.
    pub epoch_heldout_loss: Vec<Option<f64>>,
    /// Steps whose raw hinge value was negative, per epoch.
    pub epoch_violations: Vec<usize>,
    /// Smallest component weight after each epoch.
    pub epoch_min_w2: Vec<f64>,
    pub final_weights: Vec<f64>,
}

impl TrainingRecord {
    pub fn total_violations(&self) -> usize {
        self.epoch_violations.iter().sum()
    }
}

/// `w1 = 0`; `w2 = 1/m` when component weights are trained, else 0.
pub fn initial_weights(modular_dim: usize, components: usize, variant: ModelVariant) -> Vec<f64> {
    let mut w = vec![0.0; modular_dim];
    let init = if variant.trains_structured() && components > 0 {
        1.0 / components as f64
    } else {
        0.0
    };
    w.extend(std::iter::repeat_n(init, components));
    w
}

/// Builds contexts with ground-truth pools for `videos` and trains on them.
/// `held_out` videos are scored after every epoch.
pub fn train(
    videos: &[AnnotatedVideo],
    held_out: &[AnnotatedVideo],
    grid: &GridConfig,
    domain: &str,
    config: &TrainConfig,
) -> Result<(MixtureModel, TrainingRecord)> {
    config.validate()?;
    if videos.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let train_ctx: Vec<VideoContext> = videos
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            VideoContext::new(v, grid, config.budget_pct, config.measure)?
                .with_pool(config.max_gt, config.seed.wrapping_add(i as u64))
        })
        .collect::<Result<_>>()?;
    let test_ctx: Vec<VideoContext> = held_out
        .par_iter()
        .map(|v| VideoContext::new(v, grid, config.budget_pct, config.measure))
        .collect::<Result<_>>()?;
    train_on_contexts(&train_ctx, &test_ctx, domain, &grid.modular_sources(), config)
}

/// Trains on prepared contexts. Every training context needs a non-empty
/// ground-truth pool; all contexts must share one feature layout.
pub fn train_on_contexts(
    train: &[VideoContext],
    held_out: &[VideoContext],
    domain: &str,
    modular_sources: &[String],
    config: &TrainConfig,
) -> Result<(MixtureModel, TrainingRecord)> {
    config.validate()?;
    let first = train.first().ok_or(Error::EmptyCorpus)?;
    for ctx in train {
        match &ctx.pool {
            Some(p) if !p.is_empty() => {}
            _ => return Err(Error::NoGroundTruth(ctx.video_id.clone())),
        }
    }
    let specs: Vec<_> = first.components.iter().map(|c| c.spec.clone()).collect();
    let mut model = MixtureModel::new(
        domain,
        modular_sources.to_vec(),
        &first.phi.families,
        &specs,
        config.clone(),
    );
    for ctx in train.iter().chain(held_out) {
        ctx.check_model(&model)?;
    }

    let d = first.phi.dim();
    let m = specs.len();
    let variant = config.variant;
    let trainable: Vec<bool> = (0..d + m)
        .map(|i| {
            if i < d {
                variant.trains_modular()
            } else {
                variant.trains_structured()
            }
        })
        .collect();
    let reg: Vec<f64> = (0..d + m)
        .map(|i| if i < d { config.lambda1 } else { config.lambda2 })
        .collect();
    let mut w = initial_weights(d, m, variant);
    let mut grad_sq = vec![0.0; d + m];

    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut gt_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut record = TrainingRecord {
        epoch_hinge: Vec::with_capacity(config.epochs),
        epoch_heldout_loss: Vec::with_capacity(config.epochs),
        epoch_violations: Vec::with_capacity(config.epochs),
        epoch_min_w2: Vec::with_capacity(config.epochs),
        final_weights: Vec::new(),
    };
    let mut order: Vec<usize> = (0..train.len()).collect();
    let average_start = if config.averaging {
        config.epochs / 2
    } else {
        config.epochs.saturating_sub(1)
    };
    let mut sum = vec![0.0; d + m];
    let mut averaged = 0usize;
    for epoch in 0..config.epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        let mut violations = 0;
        for &i in &order {
            let ctx = &train[i];
            let pool = &ctx.pool.as_ref().expect("checked above").summaries;
            let gt = match config.gt_mode {
                GtMode::Random => &pool[gt_rng.random_range(0..pool.len())],
                GtMode::Fixed => &pool[0],
            };
            let h = hinge_loss(&w, ctx, &gt.snippet_indices)?;
            total += h.value;
            if h.clamped {
                violations += 1;
            }
            for j in 0..d + m {
                if !trainable[j] {
                    continue;
                }
                let mut g = reg[j] * w[j];
                if h.raw > 0.0 {
                    g += h.features_predicted[j] - h.features_gt[j];
                }
                let step = match config.optimizer {
                    OptimizerKind::Adagrad => {
                        grad_sq[j] += g * g;
                        config.learning_rate / (grad_sq[j] + ADAGRAD_EPS).sqrt()
                    }
                    OptimizerKind::Sgd => config.learning_rate,
                };
                w[j] -= step * g;
                if j >= d && w[j] < 0.0 {
                    w[j] = 0.0;
                }
            }
        }
        if epoch >= average_start {
            for (s, x) in sum.iter_mut().zip(&w) {
                *s += x;
            }
            averaged += 1;
        }
        record.epoch_hinge.push(total / train.len() as f64);
        record.epoch_violations.push(violations);
        record
            .epoch_min_w2
            .push(w[d..].iter().copied().reduce(f64::min).unwrap_or(0.0));
        record.epoch_heldout_loss.push(if held_out.is_empty() {
            None
        } else {
            Some(mean_score_loss(&w, held_out)?)
        });
    }
    if averaged > 0 {
        w = sum.iter().map(|x| x / averaged as f64).collect();
    }
    model.set_weights(&w)?;
    record.final_weights = w;
    Ok((model, record))
}

pub(crate) fn mean_score_loss(w: &[f64], contexts: &[VideoContext]) -> Result<f64> {
    let losses = contexts
        .par_iter()
        .map(|c| summarize_with_context(w, c).map(|(_, r)| r.score_loss))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}
