//! Model and training configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_json, write_json};
use crate::error::{Error, Result};
use crate::functions::{ComponentKind, ComponentSpec, GridConfig};
use crate::gtgen::DEFAULT_MAX_GT;
use crate::measure::MeasureParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adagrad,
    Sgd,
}

/// Which ground truth each training step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtMode {
    /// A uniformly random member of the pool at every step.
    Random,
    /// Always the first member of the pool.
    Fixed,
}

/// Which weights are trainable; frozen weights stay at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    Full,
    ModularOnly,
    StructuredOnly,
}

impl ModelVariant {
    pub fn trains_modular(self) -> bool {
        self != ModelVariant::StructuredOnly
    }

    pub fn trains_structured(self) -> bool {
        self != ModelVariant::ModularOnly
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub budget_pct: f64,
    pub gt_mode: GtMode,
    pub variant: ModelVariant,
    pub max_gt: usize,
    pub measure: MeasureParams,
    /// Return the mean of the end-of-epoch weights over the second half of
    /// training instead of the last iterate.
    #[serde(default)]
    pub averaging: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda1: 0.01,
            lambda2: 0.01,
            optimizer: OptimizerKind::Adagrad,
            learning_rate: 0.05,
            epochs: 100,
            seed: 0,
            budget_pct: 15.0,
            gt_mode: GtMode::Random,
            variant: ModelVariant::Full,
            max_gt: DEFAULT_MAX_GT,
            measure: MeasureParams::default(),
            averaging: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.measure.validate()?;
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::InvalidArgument("regularization must be ≥ 0".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if self.max_gt == 0 {
            return Err(Error::InvalidArgument("max_gt must be at least 1".into()));
        }
        crate::corpus::budget_for_len(1, self.budget_pct)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyWeights {
    pub family: String,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentWeight {
    pub id: String,
    pub spec: ComponentSpec,
    pub weight: f64,
}

/// Learned mixture: modular weights per feature family and one non-negative
/// weight per structured component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub domain: String,
    /// Feature sources of the modular term, as given in the grid.
    pub modular_sources: Vec<String>,
    pub w1: Vec<FamilyWeights>,
    pub w2: Vec<ComponentWeight>,
    pub config: TrainConfig,
}

impl MixtureModel {
    pub fn new(
        domain: impl Into<String>,
        modular_sources: Vec<String>,
        families: &[(String, usize)],
        specs: &[ComponentSpec],
        config: TrainConfig,
    ) -> Self {
        MixtureModel {
            domain: domain.into(),
            modular_sources,
            w1: families
                .iter()
                .map(|(f, d)| FamilyWeights {
                    family: f.clone(),
                    weights: vec![0.0; *d],
                })
                .collect(),
            w2: specs
                .iter()
                .map(|s| ComponentWeight {
                    id: s.id(),
                    spec: s.clone(),
                    weight: 0.0,
                })
                .collect(),
            config,
        }
    }

    pub fn w1_dim(&self) -> usize {
        self.w1.iter().map(|f| f.weights.len()).sum()
    }

    pub fn w1_flat(&self) -> Vec<f64> {
        self.w1.iter().flat_map(|f| f.weights.iter().copied()).collect()
    }

    pub fn w2_flat(&self) -> Vec<f64> {
        self.w2.iter().map(|c| c.weight).collect()
    }

    /// `[w1 ; w2]`.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = self.w1_flat();
        w.extend(self.w2_flat());
        w
    }

    pub fn set_weights(&mut self, w: &[f64]) -> Result<()> {
        let d = self.w1_dim();
        if w.len() != d + self.w2.len() {
            return Err(Error::ModelMismatch(format!(
                "{} weights for {} modular and {} component entries",
                w.len(),
                d,
                self.w2.len()
            )));
        }
        let mut it = w.iter().copied();
        for f in &mut self.w1 {
            for x in &mut f.weights {
                *x = it.next().expect("length checked");
            }
        }
        for c in &mut self.w2 {
            c.weight = it.next().expect("length checked");
        }
        Ok(())
    }

    /// The grid this model was trained on.
    pub fn grid(&self) -> GridConfig {
        let mut components: Vec<ComponentSpec> = self.w2.iter().map(|c| c.spec.clone()).collect();
        components.extend(
            self.modular_sources
                .iter()
                .map(|s| ComponentSpec::new(ComponentKind::Modular, s.clone())),
        );
        GridConfig { components }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: MixtureModel = read_json(path)?;
        if m.w2.iter().any(|c| c.weight < 0.0) {
            return Err(Error::ModelMismatch("negative component weight".into()));
        }
        Ok(m)
    }
}
