//! Experiment suites on synthetic corpora: baselines, cross-domain transfer,
//! ground-truth ablation and ground-truth sanity.

mod experiments;
mod sanity;
mod synthetic;

use serde::{Deserialize, Serialize};

use crate::functions::GridConfig;
use crate::learn::TrainConfig;

pub use experiments::{
    evaluate_weights, prepare_domain, run_baselines, run_baselines_prepared, run_cross_domain,
    run_cross_domain_prepared, run_gt_ablation, run_gt_ablation_prepared, run_suite, split_domain, train_variant,
    AblationReport, BaselineReport, BaselineRow, CrossDomainReport, PreparedDomain, SuiteReport,
};
pub use sanity::{run_gt_sanity, GtSanityReport, GtSanityRow, Range, SanityOptions, SanityStatus};
pub use synthetic::{
    generate_synthetic_corpus, generate_video, realize_domains, ConceptFamily, CorpusConfig, DenseFamily, DomainConfig,
    SyntheticDomainSpec, DEFAULT_SYNTHETIC_CONFIG,
};

/// Mean, sample standard deviation and count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Stat {
        let count = xs.len();
        if count == 0 {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
                count,
            };
        }
        let mean = xs.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, std, count }
    }

    pub fn cell(&self) -> String {
        format!("{:.4} ± {:.4} (n={})", self.mean, self.std, self.count)
    }
}

/// Training epochs of the experiment protocol.
pub const EXPERIMENT_EPOCHS: usize = 200;

/// Settings shared by the learning experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    /// Training settings; `budget_pct` and `measure` also govern evaluation.
    pub train: TrainConfig,
    /// Component grid; `None` derives the default grid from the first video.
    pub grid: Option<GridConfig>,
    pub split_seed: u64,
    pub train_fraction: f64,
    /// Number of seeds of the uniformly random baseline.
    pub random_seeds: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            train: TrainConfig {
                epochs: EXPERIMENT_EPOCHS,
                ..TrainConfig::default()
            },
            grid: None,
            split_seed: 0,
            train_fraction: 0.7,
            random_seeds: 100,
        }
    }
}

impl ExperimentOptions {
    /// Uses `seed` for the split, training and random baselines.
    pub fn with_master_seed(mut self, seed: u64) -> Self {
        self.split_seed = seed;
        self.train.seed = seed;
        self
    }
}

/// Renders rows as left-aligned, space-padded columns.
pub(crate) fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(c);
            s.extend(std::iter::repeat_n(' ', w - c.chars().count()));
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}
