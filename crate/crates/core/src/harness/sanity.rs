use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::render_table;
use crate::corpus::{budget_in_snippets, AnnotatedVideo};
use crate::error::{Error, Result};
use crate::gtgen::{generate_from_context, sample_from_raster, RandomMode};
use crate::measure::{MeasureParams, ScoreBounds, ScoreContext};

const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityOptions {
    pub budgets_pct: Vec<f64>,
    pub random_samples: usize,
    pub max_gt: usize,
    pub seed: u64,
    pub measure: MeasureParams,
}

impl Default for SanityOptions {
    fn default() -> Self {
        SanityOptions {
            budgets_pct: vec![5.0, 15.0, 30.0],
            random_samples: 1000,
            max_gt: 100,
            seed: 0,
            measure: MeasureParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Range {
    fn of(xs: &[f64]) -> Range {
        Range {
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SanityStatus {
    Pass,
    /// Constant ratings or too few eligible snippets: random summaries may
    /// tie the ground truth.
    Flagged,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtSanityRow {
    pub video_id: String,
    pub budget_pct: f64,
    pub budget: usize,
    pub pool_size: usize,
    /// Normalized scores of the ground-truth pool.
    pub gt: Range,
    /// Normalized scores of positive-only random summaries.
    pub random: Option<Range>,
    pub constant_ratings: bool,
    pub pool_ties: bool,
    pub status: SanityStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtSanityReport {
    pub seed: u64,
    pub random_samples: usize,
    pub rows: Vec<GtSanityRow>,
}

impl GtSanityReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status == SanityStatus::Fail).count()
    }

    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.status == SanityStatus::Flagged).count()
    }

    pub fn to_text(&self) -> String {
        let fmt = |r: &Range| format!("{:.4}/{:.4}/{:.4}", r.min, r.mean, r.max);
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.video_id.clone(),
                    format!("{}", r.budget_pct),
                    r.budget.to_string(),
                    r.pool_size.to_string(),
                    fmt(&r.gt),
                    r.random.as_ref().map_or("-".into(), fmt),
                    format!("{:?}", r.status).to_lowercase(),
                ]
            })
            .collect();
        format!(
            "{}{} rows, {} failed, {} flagged\n",
            render_table(
                &[
                    "video",
                    "budget%",
                    "k",
                    "pool",
                    "gt min/mean/max",
                    "random min/mean/max",
                    "status"
                ],
                &rows
            ),
            self.rows.len(),
            self.failures(),
            self.flagged()
        )
    }
}

fn sanity_row(video: &AnnotatedVideo, pct: f64, opts: &SanityOptions) -> Result<GtSanityRow> {
    let budget = budget_in_snippets(video, pct)?;
    let ctx = ScoreContext::new(video, opts.measure)?;
    let bounds = ScoreBounds::for_context(&ctx, budget)?;
    let pool = generate_from_context(&ctx, &video.id, budget, opts.max_gt, opts.seed)?;
    let gt_scores: Vec<f64> = pool.summaries.iter().map(|s| ctx.score(&s.snippet_indices)).collect();
    let gt_norm: Vec<f64> = gt_scores.iter().map(|&s| bounds.normalize(s)).collect();
    let (lo, hi) = gt_scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let pool_ties = hi - lo <= TIE_TOLERANCE * hi.abs().max(1.0);

    let raster = video.rasterize();
    let constant_ratings = raster.has_constant_ratings();
    let mut random_raw = Vec::with_capacity(opts.random_samples);
    let mut insufficient = false;
    for j in 0..opts.random_samples {
        match sample_from_raster(
            &raster,
            &video.id,
            budget,
            RandomMode::PositiveOnly,
            opts.seed.wrapping_add(j as u64),
        ) {
            Ok(y) => random_raw.push(ctx.score(&y.snippet_indices)),
            Err(Error::InsufficientSnippets { .. }) => {
                insufficient = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let random = (!random_raw.is_empty()).then(|| {
        let norm: Vec<f64> = random_raw.iter().map(|&s| bounds.normalize(s)).collect();
        Range::of(&norm)
    });
    let random_max = random_raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let status = if !pool_ties {
        SanityStatus::Fail
    } else if constant_ratings || insufficient {
        SanityStatus::Flagged
    } else if random_max < lo {
        SanityStatus::Pass
    } else {
        SanityStatus::Fail
    };
    Ok(GtSanityRow {
        video_id: video.id.clone(),
        budget_pct: pct,
        budget,
        pool_size: pool.len(),
        gt: Range::of(&gt_norm),
        random,
        constant_ratings,
        pool_ties,
        status,
    })
}

/// Ground-truth pools against positive-only random summaries for every video
/// and budget.
pub fn run_gt_sanity(videos: &[AnnotatedVideo], opts: &SanityOptions) -> Result<GtSanityReport> {
    let jobs: Vec<(&AnnotatedVideo, f64)> = videos
        .iter()
        .flat_map(|v| opts.budgets_pct.iter().map(move |&p| (v, p)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|(v, p)| sanity_row(v, *p, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(GtSanityReport {
        seed: opts.seed,
        random_samples: opts.random_samples,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::corpus::Segment;

    fn video(segments: Vec<Segment>) -> AnnotatedVideo {
        AnnotatedVideo::new("v", 2.0, 200, BTreeMap::new(), vec![], segments).unwrap()
    }

    fn seg(start: usize, len: usize, rating: i8) -> Segment {
        Segment::new(start as f64 * 2.0, (start + len) as f64 * 2.0, rating)
    }

    #[test]
    fn mixed_ratings_pass() {
        let v = video(vec![seg(0, 30, 3), seg(30, 50, 1), seg(100, 40, -2), seg(150, 50, 2)]);
        let opts = SanityOptions {
            random_samples: 200,
            ..Default::default()
        };
        let r = run_gt_sanity(&[v], &opts).unwrap();
        assert_eq!(r.rows.len(), 3);
        for row in &r.rows {
            assert!(row.pool_ties);
            assert_eq!(row.gt.min, row.gt.max);
            assert_eq!(row.status, SanityStatus::Pass, "{row:?}");
        }
    }

    #[test]
    fn constant_ratings_flagged() {
        let v = video(vec![seg(0, 200, 2)]);
        let r = run_gt_sanity(&[v], &SanityOptions::default()).unwrap();
        assert!(r.rows.iter().all(|row| row.status == SanityStatus::Flagged));
        assert_eq!(r.failures(), 0);
    }
}
