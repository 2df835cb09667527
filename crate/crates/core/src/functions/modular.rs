//! Per-snippet feature rows `φ(x)` for the modular part of the mixture.

use crate::corpus::AnnotatedVideo;
use crate::error::{Error, Result};

/// Feature source that selects every family of a video.
pub const ALL_FEATURES: &str = "all";

/// Concatenated feature families, z-scored per dimension over the ground set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularFeatures {
    /// `(family, dimension)` in concatenation order.
    pub families: Vec<(String, usize)>,
    n: usize,
    dim: usize,
    values: Vec<f64>,
}

impl ModularFeatures {
    /// Concatenates `sources` (family names, or [`ALL_FEATURES`]) in the
    /// given order; `ALL_FEATURES` expands to every family sorted by name.
    pub fn from_video(video: &AnnotatedVideo, sources: &[String]) -> Result<Self> {
        let mut names: Vec<&str> = Vec::new();
        for s in sources {
            if s == ALL_FEATURES {
                names.extend(video.features.keys().map(String::as_str));
            } else {
                names.push(s);
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        names.retain(|n| seen.insert(*n));
        let mats = names.iter().map(|n| video.feature(n)).collect::<Result<Vec<_>>>()?;
        let n = video.n_snippets;
        let dim: usize = mats.iter().map(|m| m.cols()).sum();
        let mut values = Vec::with_capacity(n * dim);
        for i in 0..n {
            for m in &mats {
                values.extend(m.row(i).iter().map(|&v| f64::from(v)));
            }
        }
        let mut phi = ModularFeatures {
            families: mats.iter().map(|m| (m.name.clone(), m.cols())).collect(),
            n,
            dim,
            values,
        };
        phi.standardize();
        Ok(phi)
    }

    /// Uses `rows` as is, without standardization.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("ragged modular rows".into()));
        }
        Ok(ModularFeatures {
            families: vec![("rows".into(), dim)],
            n: rows.len(),
            dim,
            values: rows.iter().flatten().copied().collect(),
        })
    }

    fn standardize(&mut self) {
        if self.n == 0 {
            return;
        }
        for d in 0..self.dim {
            let col = || (0..self.n).map(|i| self.values[i * self.dim + d]);
            let mean = col().sum::<f64>() / self.n as f64;
            let var = col().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.n as f64;
            let sd = var.sqrt();
            for i in 0..self.n {
                let v = &mut self.values[i * self.dim + d];
                *v = if sd > 1e-12 { (*v - mean) / sd } else { 0.0 };
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// `⟨w1, φ(x)⟩` for every snippet.
    pub fn scores(&self, w1: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w1)?;
        Ok((0..self.n)
            .map(|i| self.row(i).iter().zip(w1).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `Σ_{x∈set} φ(x)`.
    pub fn sum_rows(&self, set: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &x in set {
            for (o, v) in out.iter_mut().zip(self.row(x)) {
                *o += v;
            }
        }
        out
    }

    fn check_dim(&self, w1: &[f64]) -> Result<()> {
        if w1.len() != self.dim {
            return Err(Error::Dimension(format!(
                "w1 has {} entries, features have {}",
                w1.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// `Σ_{x∈set} ⟨w1, φ(x)⟩`.
pub fn eval_modular(phi: &ModularFeatures, set: &[usize], w1: &[f64]) -> Result<f64> {
    phi.check_dim(w1)?;
    Ok(phi.sum_rows(set).iter().zip(w1).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use approx::assert_relative_eq;

    use super::*;
    use crate::corpus::{FeatureKind, FeatureMatrix};

    #[test]
    fn modular_examples() {
        let phi = ModularFeatures::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(eval_modular(&phi, &[], &[1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(eval_modular(&phi, &[0, 1], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(eval_modular(&phi, &[0, 1], &[1.0, -1.0]).unwrap(), -2.0);
        assert!(eval_modular(&phi, &[0], &[1.0]).is_err());
    }

    #[test]
    fn features_are_standardized() {
        let mut features = BTreeMap::new();
        features.insert(
            "a".to_string(),
            FeatureMatrix::new(
                "a",
                FeatureKind::Dense,
                4,
                2,
                vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0],
            )
            .unwrap(),
        );
        features.insert(
            "b".to_string(),
            FeatureMatrix::new("b", FeatureKind::Count, 4, 1, vec![0.0, 0.0, 2.0, 2.0]).unwrap(),
        );
        let video = AnnotatedVideo::new("v", 2.0, 4, features, vec![], vec![]).unwrap();
        let phi = ModularFeatures::from_video(&video, &[ALL_FEATURES.to_string()]).unwrap();
        assert_eq!(phi.dim(), 3);
        assert_eq!(phi.families, vec![("a".to_string(), 2), ("b".to_string(), 1)]);
        let col0: Vec<f64> = (0..4).map(|i| phi.row(i)[0]).collect();
        assert_relative_eq!(col0.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(col0.iter().map(|v| v * v).sum::<f64>() / 4.0, 1.0, epsilon = 1e-12);
        assert!((0..4).all(|i| phi.row(i)[1] == 0.0));
        assert_eq!(phi.row(0)[2], -1.0);
    }
}
