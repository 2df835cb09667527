//! Similarity, distance and concept matrices derived from snippet features.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `(1 + cos(x_i, x_j)) / 2`.
    Cosine,
}

/// Symmetric `n × n` similarity in `[0, 1]` with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
    pub source: String,
    pub kernel: Kernel,
}

impl SimilarityMatrix {
    /// Wraps explicit values; used for hand-built instances.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension(format!("{} values for {n}×{n}", values.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) || v != values[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "similarity ({i}, {j}) = {v} not symmetric in [0, 1]"
                    )));
                }
            }
        }
        Ok(SimilarityMatrix {
            n,
            values,
            source: "explicit".into(),
            kernel: Kernel::Cosine,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        SimilarityMatrix {
            n,
            values,
            source: "identity".into(),
            kernel: Kernel::Cosine,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        1.0 - self.get(i, j)
    }

    pub fn to_distances(&self) -> DistanceMatrix {
        DistanceMatrix {
            n: self.n,
            values: self.values.iter().map(|s| 1.0 - s).collect(),
        }
    }
}

/// Symmetric non-negative `n × n` dissimilarity with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension(format!("{} values for {n}×{n}", values.len())));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("d({i}, {i}) must be 0")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v >= 0.0) || v != values[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "distance ({i}, {j}) = {v} not symmetric non-negative"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { n, values })
    }

    /// Euclidean distances between points (rows).
    pub fn euclidean(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        DistanceMatrix { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn max_pairwise(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Minimum pairwise distance inside `set`; `None` for fewer than two items.
    pub fn min_pairwise(&self, set: &[usize]) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                let d = self.get(i, j);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptInterpretation {
    /// `w_xu`: coverage weight of concept `u` by snippet `x`.
    Weight,
    /// `p_xu`: probability that snippet `x` covers concept `u`.
    Probability,
}

/// `n × |U|` snippet-to-concept matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptMatrix {
    n: usize,
    concepts: usize,
    values: Vec<f64>,
    pub interpretation: ConceptInterpretation,
}

impl ConceptMatrix {
    pub fn from_rows(rows: &[Vec<f64>], interpretation: ConceptInterpretation) -> Result<Self> {
        let concepts = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != concepts) {
            return Err(Error::Dimension("ragged concept rows".into()));
        }
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("concept values must be finite and ≥ 0".into()));
        }
        if interpretation == ConceptInterpretation::Probability && values.iter().any(|v| *v > 1.0) {
            return Err(Error::InvalidArgument("probabilities must lie in [0, 1]".into()));
        }
        Ok(ConceptMatrix {
            n: rows.len(),
            concepts,
            values,
            interpretation,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_concepts(&self) -> usize {
        self.concepts
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.concepts..(i + 1) * self.concepts]
    }

    /// Entries `≥ threshold` become 1, the rest 0.
    pub fn binarized(&self, threshold: f64) -> Self {
        ConceptMatrix {
            values: self
                .values
                .iter()
                .map(|&v| if v >= threshold { 1.0 } else { 0.0 })
                .collect(),
            ..self.clone()
        }
    }
}

/// Cosine similarity mapped to `[0, 1]`. Zero rows are similar only to
/// themselves.
pub fn similarity_matrix(features: &FeatureMatrix) -> Result<SimilarityMatrix> {
    if features.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidFeature {
            feature: features.name.clone(),
            reason: "non-finite value".into(),
        });
    }
    let n = features.rows();
    let normed: Vec<Option<Vec<f64>>> = (0..n)
        .map(|i| {
            let row: Vec<f64> = features.row(i).iter().map(|&v| f64::from(v)).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            (norm > 0.0).then(|| row.iter().map(|v| v / norm).collect())
        })
        .collect();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, out)| {
        for (j, slot) in out.iter_mut().enumerate() {
            // Computed from the lower index so that (i, j) and (j, i) are bit-identical.
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            *slot = if a == b {
                1.0
            } else {
                match (&normed[a], &normed[b]) {
                    (Some(x), Some(y)) => {
                        let cos: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
                        ((1.0 + cos) / 2.0).clamp(0.0, 1.0)
                    }
                    _ => 0.0,
                }
            };
        }
    });
    Ok(SimilarityMatrix {
        n,
        values,
        source: features.name.clone(),
        kernel: Kernel::Cosine,
    })
}

/// Concept matrix of a probability or count feature. Probabilities are clipped
/// to `[0, 1]`; counts pass through as coverage weights.
pub fn concept_matrix(features: &FeatureMatrix) -> Result<ConceptMatrix> {
    let interpretation = match features.kind {
        FeatureKind::Probability => ConceptInterpretation::Probability,
        FeatureKind::Count => ConceptInterpretation::Weight,
        FeatureKind::Dense => {
            return Err(Error::InvalidFeature {
                feature: features.name.clone(),
                reason: "dense features are not concept matrices".into(),
            })
        }
    };
    let values = features
        .values()
        .iter()
        .map(|&v| {
            let v = f64::from(v);
            match interpretation {
                ConceptInterpretation::Probability => v.clamp(0.0, 1.0),
                ConceptInterpretation::Weight => v.max(0.0),
            }
        })
        .collect();
    Ok(ConceptMatrix {
        n: features.rows(),
        concepts: features.cols(),
        values,
        interpretation,
    })
}

/// `1 / (1 + |i − j|)` when both snippets share a shot, else 0.
pub fn index_proximity_weights(shot_of: &[usize], i: usize, j: usize) -> f64 {
    if shot_of[i] == shot_of[j] {
        1.0 / (1.0 + i.abs_diff(j) as f64)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn dense(rows: &[Vec<f32>]) -> FeatureMatrix {
        FeatureMatrix::from_rows("d", FeatureKind::Dense, rows).unwrap()
    }

    #[test]
    fn cosine_kernel_examples() {
        let s = similarity_matrix(&dense(&[
            vec![1.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 3.0],
            vec![-1.0, 0.0],
            vec![0.0, 0.0],
        ]))
        .unwrap();
        assert_relative_eq!(s.get(0, 1), 1.0);
        assert_relative_eq!(s.get(0, 2), 0.5);
        assert_relative_eq!(s.get(0, 3), 0.0);
        assert_eq!(s.get(4, 0), 0.0);
        assert_eq!(s.get(4, 4), 1.0);
        assert_relative_eq!(s.distance(0, 2), 0.5);
    }

    #[test]
    fn concept_matrix_examples() {
        let w = FeatureMatrix::new("w", FeatureKind::Count, 1, 2, vec![0.5, 1.5]).unwrap();
        let wm = concept_matrix(&w).unwrap();
        assert_eq!(wm.row(0), &[0.5, 1.5]);
        assert_eq!(wm.interpretation, ConceptInterpretation::Weight);
        assert_eq!(wm.binarized(1.0).row(0), &[0.0, 1.0]);

        let prob = FeatureMatrix::new("p", FeatureKind::Probability, 1, 2, vec![0.3, 1.0]).unwrap();
        let c = concept_matrix(&prob).unwrap();
        assert_eq!(c.row(0)[1], 1.0);

        let counts = FeatureMatrix::new("c", FeatureKind::Count, 1, 2, vec![2.0, 0.0]).unwrap();
        assert_eq!(concept_matrix(&counts).unwrap().row(0), &[2.0, 0.0]);

        let zeros = FeatureMatrix::new("z", FeatureKind::Count, 3, 2, vec![0.0; 6]).unwrap();
        assert!(concept_matrix(&zeros).unwrap().row(2).iter().all(|&v| v == 0.0));

        assert!(concept_matrix(&dense(&[vec![1.0]])).is_err());
    }

    #[test]
    fn probability_clip_above_one() {
        // Probability files are validated on load, but explicit rows may carry noise.
        let c = ConceptMatrix::from_rows(&[vec![0.3, 1.0]], ConceptInterpretation::Probability).unwrap();
        assert_eq!(c.row(0), &[0.3, 1.0]);
        assert!(ConceptMatrix::from_rows(&[vec![0.3, 1.2]], ConceptInterpretation::Probability).is_err());
    }

    #[test]
    fn proximity_weights() {
        let shot_of = [0, 0, 0, 0, 1, 1];
        assert_relative_eq!(index_proximity_weights(&shot_of, 0, 2), 1.0 / 3.0);
        assert_relative_eq!(index_proximity_weights(&shot_of, 1, 2), 0.5);
        assert_eq!(index_proximity_weights(&shot_of, 3, 4), 0.0);
    }

    #[test]
    fn distance_helpers() {
        let d = DistanceMatrix::euclidean(&[vec![0.0], vec![1.0], vec![10.0]]);
        assert_eq!(d.get(0, 2), 10.0);
        assert_eq!(d.max_pairwise(), 10.0);
        assert_eq!(d.min_pairwise(&[0, 1, 2]), Some(1.0));
        assert_eq!(d.min_pairwise(&[2]), None);
    }

    proptest! {
        #[test]
        fn similarity_symmetric_unit_diagonal(
            n in 1usize..12,
            dim in 1usize..6,
            raw in proptest::collection::vec(-5.0f32..5.0, 72),
        ) {
            let values: Vec<f32> = raw.into_iter().cycle().take(n * dim).collect();
            let fm = FeatureMatrix::new("r", FeatureKind::Dense, n, dim, values).unwrap();
            let s = similarity_matrix(&fm).unwrap();
            let d = s.to_distances();
            for i in 0..n {
                prop_assert_eq!(s.get(i, i), 1.0);
                prop_assert_eq!(d.get(i, i), 0.0);
                for j in 0..n {
                    prop_assert_eq!(s.get(i, j), s.get(j, i));
                    prop_assert!((0.0..=1.0).contains(&s.get(i, j)));
                    prop_assert_eq!(d.get(i, j), d.get(j, i));
                }
            }
        }
    }
}
