//! Videos, snippets, rated segments, feature matrices and summaries.
//!
//! A video is a ground set of fixed-length snippets. Every feature family is a
//! dense `n_snippets × dim` matrix; annotations are rated segments expressed in
//! seconds and mapped onto snippet indices by [`rasterize_segments`].

mod features;
mod manifest;
mod raster;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use features::{read_feature_file, write_feature_file, FEATURE_MAGIC, FEATURE_VERSION};
pub use manifest::{
    load_manifest, load_summary, save_manifest, save_summary, FeatureEntry, Manifest, ManifestVideo, SummaryFile,
};
pub(crate) use manifest::{read_json, write_json};
pub use raster::{rasterize_segments, Raster, RasterSegment};

pub const MIN_RATING: i8 = -3;
pub const MAX_RATING: i8 = 3;
pub const DEFAULT_SNIPPET_SECONDS: f64 = 2.0;

/// A rated, contiguous span of a video in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_sec: f64,
    pub end_sec: f64,
    pub rating: i8,
    #[serde(default)]
    pub repetitive: bool,
    #[serde(default)]
    pub description: String,
}

impl Segment {
    pub fn new(start_sec: f64, end_sec: f64, rating: i8) -> Self {
        Segment {
            start_sec,
            end_sec,
            rating,
            repetitive: false,
            description: String::new(),
        }
    }

    pub fn repetitive(mut self) -> Self {
        self.repetitive = true;
        self
    }

    pub fn duration(&self) -> f64 {
        self.end_sec - self.start_sec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Real-valued embedding, e.g. a CNN layer average.
    Dense,
    /// Per-concept probabilities in `[0, 1]`.
    Probability,
    /// Non-negative per-concept weights such as detection counts.
    Count,
}

impl FeatureKind {
    pub fn is_concept(self) -> bool {
        matches!(self, FeatureKind::Probability | FeatureKind::Count)
    }
}

/// Row-major `rows × cols` matrix of 32-bit floats, one row per snippet.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub name: String,
    pub kind: FeatureKind,
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(name: impl Into<String>, kind: FeatureKind, rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        let name = name.into();
        if values.len() != rows * cols {
            return Err(Error::InvalidFeature {
                feature: name,
                reason: format!("{} values for a {rows}×{cols} matrix", values.len()),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFeature {
                feature: name,
                reason: format!("non-finite value at row {}", pos / cols.max(1)),
            });
        }
        if kind == FeatureKind::Probability {
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidFeature {
                    feature: name,
                    reason: format!("probability value {v} outside [0, 1]"),
                });
            }
        }
        if kind == FeatureKind::Count && values.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidFeature {
                feature: name,
                reason: "negative count".into(),
            });
        }
        Ok(FeatureMatrix {
            name,
            kind,
            rows,
            cols,
            values,
        })
    }

    pub fn from_rows(name: impl Into<String>, kind: FeatureKind, rows: &[Vec<f32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let name = name.into();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidFeature {
                feature: name,
                reason: "ragged rows".into(),
            });
        }
        let values = rows.iter().flatten().copied().collect();
        FeatureMatrix::new(name, kind, rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.cols + j]
    }
}

/// A video with its snippet features, shot partition and rated segments.
#[derive(Debug, Clone)]
pub struct AnnotatedVideo {
    pub id: String,
    pub domain: Option<String>,
    pub snippet_seconds: f64,
    pub n_snippets: usize,
    pub features: BTreeMap<String, FeatureMatrix>,
    /// Half-open snippet ranges `[start, end)` partitioning `0..n_snippets`.
    pub shots: Vec<(usize, usize)>,
    pub segments: Vec<Segment>,
}

impl AnnotatedVideo {
    /// Builds a video and checks every invariant. Ratings outside `[-3, 3]`
    /// are clamped and segments are sorted by start time.
    pub fn new(
        id: impl Into<String>,
        snippet_seconds: f64,
        n_snippets: usize,
        features: BTreeMap<String, FeatureMatrix>,
        shots: Vec<(usize, usize)>,
        mut segments: Vec<Segment>,
    ) -> Result<Self> {
        for s in &mut segments {
            s.rating = s.rating.clamp(MIN_RATING, MAX_RATING);
        }
        segments.sort_by(|a, b| a.start_sec.total_cmp(&b.start_sec));
        let shots = if shots.is_empty() && n_snippets > 0 {
            vec![(0, n_snippets)]
        } else {
            shots
        };
        let video = AnnotatedVideo {
            id: id.into(),
            domain: None,
            snippet_seconds,
            n_snippets,
            features,
            shots,
            segments,
        };
        video.validate()?;
        Ok(video)
    }

    pub fn with_domain(mut self, domain: impl Into<String>) -> Self {
        self.domain = Some(domain.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let video = || self.id.clone();
        if !(self.snippet_seconds > 0.0 && self.snippet_seconds.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "video {}: snippet_seconds must be positive",
                self.id
            )));
        }
        for (name, fm) in &self.features {
            if fm.rows() != self.n_snippets {
                return Err(Error::RowMismatch {
                    video: video(),
                    feature: name.clone(),
                    rows: fm.rows(),
                    expected: self.n_snippets,
                });
            }
        }
        let mut cursor = 0;
        for &(start, end) in &self.shots {
            if start != cursor || end <= start {
                return Err(Error::InvalidShots {
                    video: video(),
                    reason: format!("shot [{start}, {end}) does not continue at {cursor}"),
                });
            }
            cursor = end;
        }
        if cursor != self.n_snippets {
            return Err(Error::InvalidShots {
                video: video(),
                reason: format!("shots cover {cursor} of {} snippets", self.n_snippets),
            });
        }
        for s in &self.segments {
            if !(s.start_sec >= 0.0 && s.end_sec > s.start_sec && s.end_sec.is_finite()) {
                return Err(Error::InvalidSegment {
                    video: video(),
                    reason: format!("bounds [{}, {})", s.start_sec, s.end_sec),
                });
            }
            if s.repetitive && s.rating < 0 {
                return Err(Error::InvalidSegment {
                    video: video(),
                    reason: format!(
                        "segment at {}s is repetitive with negative rating {}",
                        s.start_sec, s.rating
                    ),
                });
            }
        }
        for pair in self.segments.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.start_sec < a.end_sec {
                return Err(Error::OverlappingSegments {
                    video: video(),
                    a_start: a.start_sec,
                    a_end: a.end_sec,
                    b_start: b.start_sec,
                    b_end: b.end_sec,
                });
            }
        }
        Ok(())
    }

    pub fn feature(&self, name: &str) -> Result<&FeatureMatrix> {
        self.features.get(name).ok_or_else(|| Error::MissingFeature {
            video: self.id.clone(),
            feature: name.to_string(),
        })
    }

    pub fn duration_sec(&self) -> f64 {
        self.n_snippets as f64 * self.snippet_seconds
    }

    /// Shot index of every snippet.
    pub fn shot_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_snippets];
        for (s, &(start, end)) in self.shots.iter().enumerate() {
            out[start..end].fill(s);
        }
        out
    }

    pub fn rasterize(&self) -> Raster {
        rasterize_segments(self)
    }
}

/// A predicted or reference summary: a sorted, duplicate-free snippet set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Summary {
    pub video_id: String,
    pub snippet_indices: Vec<usize>,
}

impl Summary {
    pub fn new(video_id: impl Into<String>, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Summary {
            video_id: video_id.into(),
            snippet_indices: indices,
        }
    }

    pub fn len(&self) -> usize {
        self.snippet_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippet_indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.snippet_indices.binary_search(&i).is_ok()
    }

    pub fn check_bounds(&self, n_snippets: usize) -> Result<()> {
        match self.snippet_indices.last() {
            Some(&last) if last >= n_snippets => Err(Error::OutOfRange {
                element: last,
                n: n_snippets,
            }),
            _ => Ok(()),
        }
    }
}

/// Converts a budget percentage into a snippet count: `max(1, ⌊pct/100 · n⌋)`.
pub fn budget_in_snippets(video: &AnnotatedVideo, budget_pct: f64) -> Result<usize> {
    budget_for_len(video.n_snippets, budget_pct)
}

pub fn budget_for_len(n_snippets: usize, budget_pct: f64) -> Result<usize> {
    if !(budget_pct > 0.0 && budget_pct <= 100.0) {
        return Err(Error::BudgetPercent(budget_pct));
    }
    // pct·n is exact for integral percentages, so divide last.
    let raw = (budget_pct * n_snippets as f64 / 100.0).floor() as usize;
    Ok(raw.max(1))
}
