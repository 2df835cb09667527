use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{render_table, ExperimentOptions, Stat};
use crate::corpus::AnnotatedVideo;
use crate::error::{Error, Result};
use crate::functions::GridConfig;
use crate::gtgen::{sample_from_raster, RandomMode};
use crate::learn::{
    initial_weights, summarize_with_context, train_on_contexts, GtMode, MixtureModel, ModelVariant, TrainConfig,
    TrainingRecord, VideoContext,
};

/// Train/test videos of one domain, bound to its grid.
#[derive(Debug, Clone)]
pub struct PreparedDomain {
    pub domain: String,
    pub grid: GridConfig,
    pub train_videos: Vec<AnnotatedVideo>,
    pub test_videos: Vec<AnnotatedVideo>,
    /// Training contexts with ground-truth pools.
    pub train: Vec<VideoContext>,
    pub test: Vec<VideoContext>,
}

/// Seeded split of `domain`'s videos into train and test sets.
pub fn split_domain(
    videos: &[AnnotatedVideo],
    domain: &str,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<AnnotatedVideo>, Vec<AnnotatedVideo>)> {
    let mut own: Vec<&AnnotatedVideo> = videos.iter().filter(|v| v.domain.as_deref() == Some(domain)).collect();
    if own.is_empty() {
        return Err(Error::UnknownDomain(domain.to_string()));
    }
    if own.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "domain {domain} needs at least two videos for a split"
        )));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    own.sort_by(|a, b| a.id.cmp(&b.id));
    own.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((own.len() as f64 * train_fraction).round() as usize).clamp(1, own.len() - 1);
    let (a, b) = own.split_at(n_train);
    Ok((
        a.iter().map(|v| (*v).clone()).collect(),
        b.iter().map(|v| (*v).clone()).collect(),
    ))
}

fn contexts(
    videos: &[AnnotatedVideo],
    grid: &GridConfig,
    config: &TrainConfig,
    pools: bool,
) -> Result<Vec<VideoContext>> {
    videos
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let ctx = VideoContext::new(v, grid, config.budget_pct, config.measure)?;
            if pools {
                ctx.with_pool(config.max_gt, config.seed.wrapping_add(i as u64))
            } else {
                Ok(ctx)
            }
        })
        .collect()
}

pub fn prepare_domain(videos: &[AnnotatedVideo], domain: &str, opts: &ExperimentOptions) -> Result<PreparedDomain> {
    let (train_videos, test_videos) = split_domain(videos, domain, opts.train_fraction, opts.split_seed)?;
    let grid = opts
        .grid
        .clone()
        .unwrap_or_else(|| GridConfig::default_for_video(&train_videos[0]))
        .for_domain(Some(domain));
    let train = contexts(&train_videos, &grid, &opts.train, true)?;
    let test = contexts(&test_videos, &grid, &opts.train, false)?;
    Ok(PreparedDomain {
        domain: domain.to_string(),
        grid,
        train_videos,
        test_videos,
        train,
        test,
    })
}

pub fn train_variant(
    p: &PreparedDomain,
    variant: ModelVariant,
    gt_mode: GtMode,
    config: &TrainConfig,
) -> Result<(MixtureModel, TrainingRecord)> {
    let config = TrainConfig {
        variant,
        gt_mode,
        ..config.clone()
    };
    train_on_contexts(&p.train, &[], &p.domain, &p.grid.modular_sources(), &config)
}

/// Test ScoreLoss of weight vector `w` on every context, in order.
pub fn evaluate_weights(w: &[f64], contexts: &[VideoContext]) -> Result<Vec<f64>> {
    contexts
        .par_iter()
        .map(|c| summarize_with_context(w, c).map(|(_, r)| r.score_loss))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub method: String,
    pub loss: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub domain: String,
    pub budget_pct: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub rows: Vec<BaselineRow>,
    /// Id of the single component with the lowest test loss.
    pub best_component: Option<String>,
    pub component_losses: Vec<BaselineRow>,
}

impl BaselineReport {
    pub const FULL: &'static str = "full";
    pub const ALL_MODULAR: &'static str = "all-modular";
    pub const ALL_SUBMODULAR: &'static str = "all-submodular";
    pub const RANDOM: &'static str = "random";
    pub const UNIFORM: &'static str = "uniform";
    pub const BEST_COMPONENT: &'static str = "best-component";
    pub const COMPONENT_AVERAGE: &'static str = "component-average";

    pub fn get(&self, method: &str) -> Option<Stat> {
        self.rows.iter().find(|r| r.method == method).map(|r| r.loss)
    }

    fn mean(&self, method: &str) -> f64 {
        self.get(method).map_or(f64::NAN, |s| s.mean)
    }

    /// Whether the full mixture beats the two restricted models and both
    /// trivial baselines by at least `margin`.
    pub fn full_beats_all(&self, margin: f64) -> bool {
        let full = self.mean(Self::FULL);
        [Self::ALL_MODULAR, Self::ALL_SUBMODULAR, Self::RANDOM, Self::UNIFORM]
            .iter()
            .all(|m| full + margin <= self.mean(m))
    }

    /// Whether both restricted models beat both trivial baselines.
    pub fn restricted_beat_trivial(&self) -> bool {
        let restricted = self.mean(Self::ALL_MODULAR).max(self.mean(Self::ALL_SUBMODULAR));
        restricted < self.mean(Self::RANDOM).min(self.mean(Self::UNIFORM))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "domain {}  budget {}%  seed {}  train {}  test {}\n",
            self.domain, self.budget_pct, self.seed, self.n_train, self.n_test
        );
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.method.clone(),
                    format!("{:.4}", r.loss.mean),
                    format!("{:.4}", r.loss.std),
                    r.loss.count.to_string(),
                ]
            })
            .collect();
        out.push_str(&render_table(&["method", "score_loss", "std", "n"], &rows));
        if let Some(b) = &self.best_component {
            out.push_str(&format!("best component: {b}\n"));
        }
        out
    }
}

/// Runs every baseline on a prepared domain. `full` reuses an already trained
/// full model.
pub fn run_baselines_prepared(
    p: &PreparedDomain,
    opts: &ExperimentOptions,
    full: Option<&MixtureModel>,
) -> Result<BaselineReport> {
    let cfg = &opts.train;
    let full_w = match full {
        Some(m) => m.weights(),
        None => train_variant(p, ModelVariant::Full, cfg.gt_mode, cfg)?.0.weights(),
    };
    let modular_w = train_variant(p, ModelVariant::ModularOnly, cfg.gt_mode, cfg)?
        .0
        .weights();
    let structured_w = train_variant(p, ModelVariant::StructuredOnly, cfg.gt_mode, cfg)?
        .0
        .weights();

    let mut rows = vec![
        BaselineRow {
            method: BaselineReport::FULL.into(),
            loss: Stat::of(&evaluate_weights(&full_w, &p.test)?),
        },
        BaselineRow {
            method: BaselineReport::ALL_MODULAR.into(),
            loss: Stat::of(&evaluate_weights(&modular_w, &p.test)?),
        },
        BaselineRow {
            method: BaselineReport::ALL_SUBMODULAR.into(),
            loss: Stat::of(&evaluate_weights(&structured_w, &p.test)?),
        },
    ];

    let random: Vec<f64> = p
        .test
        .par_iter()
        .zip(&p.test_videos)
        .map(|(ctx, v)| {
            let raster = v.rasterize();
            (0..opts.random_seeds)
                .map(|j| {
                    let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(j as u64);
                    let y = sample_from_raster(&raster, &v.id, ctx.budget, RandomMode::UniformRandom, seed)?;
                    Ok(ctx.bounds.loss(ctx.score.score(&y.snippet_indices)))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    rows.push(BaselineRow {
        method: BaselineReport::RANDOM.into(),
        loss: Stat::of(&random),
    });
    let uniform = p
        .test
        .iter()
        .zip(&p.test_videos)
        .map(|(ctx, v)| {
            let y = sample_from_raster(&v.rasterize(), &v.id, ctx.budget, RandomMode::UniformSpaced, 0)?;
            Ok(ctx.bounds.loss(ctx.score.score(&y.snippet_indices)))
        })
        .collect::<Result<Vec<f64>>>()?;
    rows.push(BaselineRow {
        method: BaselineReport::UNIFORM.into(),
        loss: Stat::of(&uniform),
    });

    let first = p.test.first().ok_or(Error::EmptyCorpus)?;
    let d = first.phi.dim();
    let m = first.components.len();
    let mut component_losses = Vec::with_capacity(m);
    for (i, c) in first.components.iter().enumerate() {
        let mut w = initial_weights(d, m, ModelVariant::ModularOnly);
        w[d + i] = 1.0;
        component_losses.push(BaselineRow {
            method: c.id(),
            loss: Stat::of(&evaluate_weights(&w, &p.test)?),
        });
    }
    let best = component_losses
        .iter()
        .min_by(|a, b| a.loss.mean.total_cmp(&b.loss.mean))
        .cloned();
    if let Some(b) = &best {
        rows.push(BaselineRow {
            method: BaselineReport::BEST_COMPONENT.into(),
            loss: b.loss,
        });
        let means: Vec<f64> = component_losses.iter().map(|r| r.loss.mean).collect();
        rows.push(BaselineRow {
            method: BaselineReport::COMPONENT_AVERAGE.into(),
            loss: Stat::of(&means),
        });
    }
    Ok(BaselineReport {
        domain: p.domain.clone(),
        budget_pct: cfg.budget_pct,
        seed: cfg.seed,
        n_train: p.train.len(),
        n_test: p.test.len(),
        rows,
        best_component: best.map(|b| b.method),
        component_losses,
    })
}

pub fn run_baselines(videos: &[AnnotatedVideo], domain: &str, opts: &ExperimentOptions) -> Result<BaselineReport> {
    let p = prepare_domain(videos, domain, opts)?;
    run_baselines_prepared(&p, opts, None)
}

/// ScoreLoss of each domain's model (rows) on each domain's test videos
/// (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDomainReport {
    pub domains: Vec<String>,
    pub seed: u64,
    pub cells: Vec<Vec<Stat>>,
    /// Per row: the diagonal entry is strictly below every other entry.
    pub diagonal_minimal: Vec<bool>,
}

impl CrossDomainReport {
    pub fn all_diagonal_minimal(&self) -> bool {
        self.diagonal_minimal.iter().all(|&b| b)
    }

    pub fn to_text(&self) -> String {
        let mut header = vec!["trained \\ tested"];
        header.extend(self.domains.iter().map(String::as_str));
        header.push("diagonal");
        let rows: Vec<Vec<String>> = self
            .domains
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut r = vec![d.clone()];
                r.extend(self.cells[i].iter().map(Stat::cell));
                r.push(
                    if self.diagonal_minimal[i] {
                        "minimal"
                    } else {
                        "NOT MINIMAL"
                    }
                    .into(),
                );
                r
            })
            .collect();
        format!("seed {}\n{}", self.seed, render_table(&header, &rows))
    }
}

/// Evaluates each model on every prepared domain's test videos. Contexts are
/// rebuilt when a model's grid differs from the tested domain's grid.
pub fn run_cross_domain_prepared(
    prepared: &[PreparedDomain],
    models: &[MixtureModel],
    opts: &ExperimentOptions,
) -> Result<CrossDomainReport> {
    if prepared.len() != models.len() {
        return Err(Error::InvalidArgument(format!(
            "{} domains but {} models",
            prepared.len(),
            models.len()
        )));
    }
    let mut cells = Vec::with_capacity(models.len());
    for model in models {
        let grid = model.grid();
        let w = model.weights();
        let mut row = Vec::with_capacity(prepared.len());
        for p in prepared {
            let losses = if grid == p.grid {
                evaluate_weights(&w, &p.test)?
            } else {
                let ctx = contexts(&p.test_videos, &grid, &opts.train, false)?;
                for c in &ctx {
                    c.check_model(model)?;
                }
                evaluate_weights(&w, &ctx)?
            };
            row.push(Stat::of(&losses));
        }
        cells.push(row);
    }
    let diagonal_minimal = cells
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().all(|(j, s)| i == j || row[i].mean < s.mean))
        .collect();
    Ok(CrossDomainReport {
        domains: prepared.iter().map(|p| p.domain.clone()).collect(),
        seed: opts.train.seed,
        cells,
        diagonal_minimal,
    })
}

pub fn run_cross_domain(
    videos: &[AnnotatedVideo],
    domains: &[String],
    opts: &ExperimentOptions,
) -> Result<CrossDomainReport> {
    if domains.len() < 2 {
        return Err(Error::InvalidArgument("cross-domain needs at least two domains".into()));
    }
    let prepared = domains
        .iter()
        .map(|d| prepare_domain(videos, d, opts))
        .collect::<Result<Vec<_>>>()?;
    let models = prepared
        .iter()
        .map(|p| train_variant(p, ModelVariant::Full, opts.train.gt_mode, &opts.train).map(|(m, _)| m))
        .collect::<Result<Vec<_>>>()?;
    run_cross_domain_prepared(&prepared, &models, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub domain: String,
    pub seed: u64,
    pub random_gt: Stat,
    pub fixed_gt: Stat,
    /// Ground-truth pool size per training video.
    pub pool_sizes: Vec<usize>,
    pub identical_models: bool,
}

impl AblationReport {
    pub fn to_text(&self) -> String {
        let rows = vec![
            vec!["random-gt".to_string(), self.random_gt.cell()],
            vec!["fixed-gt".to_string(), self.fixed_gt.cell()],
        ];
        format!(
            "domain {}  seed {}  pool sizes {:?}{}\n{}",
            self.domain,
            self.seed,
            self.pool_sizes,
            if self.identical_models {
                "  (identical models)"
            } else {
                ""
            },
            render_table(&["ground truth", "score_loss"], &rows)
        )
    }
}

pub fn run_gt_ablation_prepared(p: &PreparedDomain, opts: &ExperimentOptions) -> Result<AblationReport> {
    ablation_with(p, opts, None)
}

/// Ablation reusing an already trained random-ground-truth model.
fn ablation_with(
    p: &PreparedDomain,
    opts: &ExperimentOptions,
    random: Option<&MixtureModel>,
) -> Result<AblationReport> {
    let rw = match random {
        Some(m) => m.weights(),
        None => train_variant(p, ModelVariant::Full, GtMode::Random, &opts.train)?
            .0
            .weights(),
    };
    let fw = train_variant(p, ModelVariant::Full, GtMode::Fixed, &opts.train)?
        .0
        .weights();
    Ok(AblationReport {
        domain: p.domain.clone(),
        seed: opts.train.seed,
        random_gt: Stat::of(&evaluate_weights(&rw, &p.test)?),
        fixed_gt: Stat::of(&evaluate_weights(&fw, &p.test)?),
        pool_sizes: p.train.iter().map(|c| c.pool.as_ref().map_or(0, |g| g.len())).collect(),
        identical_models: rw == fw,
    })
}

pub fn run_gt_ablation(videos: &[AnnotatedVideo], domain: &str, opts: &ExperimentOptions) -> Result<AblationReport> {
    run_gt_ablation_prepared(&prepare_domain(videos, domain, opts)?, opts)
}

/// Baselines for every domain, the cross-domain matrix of their full models
/// and, optionally, the ground-truth ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub baselines: Vec<BaselineReport>,
    pub cross_domain: CrossDomainReport,
    #[serde(default)]
    pub ablations: Vec<AblationReport>,
}

impl SuiteReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.baselines {
            out.push_str(&b.to_text());
            out.push('\n');
        }
        out.push_str(&self.cross_domain.to_text());
        for a in &self.ablations {
            out.push('\n');
            out.push_str(&a.to_text());
        }
        out
    }
}

pub fn run_suite(
    videos: &[AnnotatedVideo],
    domains: &[String],
    opts: &ExperimentOptions,
    ablation: bool,
) -> Result<SuiteReport> {
    let prepared = domains
        .iter()
        .map(|d| prepare_domain(videos, d, opts))
        .collect::<Result<Vec<_>>>()?;
    let models = prepared
        .iter()
        .map(|p| train_variant(p, ModelVariant::Full, opts.train.gt_mode, &opts.train).map(|(m, _)| m))
        .collect::<Result<Vec<_>>>()?;
    let baselines = prepared
        .iter()
        .zip(&models)
        .map(|(p, m)| run_baselines_prepared(p, opts, Some(m)))
        .collect::<Result<Vec<_>>>()?;
    let cross_domain = run_cross_domain_prepared(&prepared, &models, opts)?;
    let ablations = if ablation && opts.train.gt_mode == GtMode::Random {
        prepared
            .iter()
            .zip(&models)
            .map(|(p, m)| ablation_with(p, opts, Some(m)))
            .collect::<Result<Vec<_>>>()?
    } else if ablation {
        prepared
            .iter()
            .map(|p| run_gt_ablation_prepared(p, opts))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(SuiteReport {
        baselines,
        cross_domain,
        ablations,
    })
}
