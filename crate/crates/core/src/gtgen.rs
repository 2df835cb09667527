//! Ground-truth summaries from ratings, and random baselines.
//!
//! Rating classes are consumed from 3 down to 0 with repetitive segments
//! trimmed to their first `β` snippets. Classes that fit are taken whole. The
//! first class that overflows the remaining budget `R` is split: within one
//! class every segment of (trimmed) length `ℓ` holding `t` selected snippets
//! is worth `e^{αr}(t + t²/ℓ)`, so a fill of exactly `R` snippets scores
//! `e^{αr}(2R − t(ℓ − t)/ℓ)` where `t` counts the snippets of the single broken
//! segment. The pool therefore consists of the fills that minimise
//! `t(ℓ − t)/ℓ`: whole segments summing exactly to `R` when some subset does,
//! otherwise the best broken prefix on top of an exact subset of the rest.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedVideo, Summary};
use crate::error::{Error, Result};
use crate::measure::{MeasureParams, ScoreContext};

pub const DEFAULT_MAX_GT: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthPool {
    pub video_id: String,
    pub budget_snippets: usize,
    pub seed: u64,
    pub summaries: Vec<Summary>,
}

impl GroundTruthPool {
    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }
}

/// One segment after repetitive trimming: `[start, start + len)`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    start: usize,
    len: usize,
}

impl Piece {
    fn prefix(&self, t: usize) -> std::ops::Range<usize> {
        self.start..self.start + t
    }
}

/// Which piece is broken and how many of its snippets are kept.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Break {
    None,
    Piece { index: usize, keep: usize },
}

#[derive(Debug)]
struct Plan {
    fixed: Vec<usize>,
    split: Option<Split>,
}

#[derive(Debug)]
struct Split {
    pieces: Vec<Piece>,
    remaining: usize,
    options: Vec<Break>,
}

/// Bitset of reachable subset sums in `0..=cap`.
#[derive(Clone)]
struct SumSet {
    words: Vec<u64>,
    cap: usize,
}

impl SumSet {
    fn zero(cap: usize) -> Self {
        let mut words = vec![0u64; cap / 64 + 1];
        words[0] = 1;
        SumSet { words, cap }
    }

    fn contains(&self, s: usize) -> bool {
        s <= self.cap && self.words[s / 64] >> (s % 64) & 1 == 1
    }

    /// `self ∪ (self + shift)`.
    fn with_item(&self, shift: usize) -> Self {
        let mut out = self.clone();
        if shift <= self.cap {
            let (ws, bs) = (shift / 64, shift % 64);
            for i in (ws..self.words.len()).rev() {
                let lo = self.words[i - ws] << bs;
                let hi = if bs > 0 && i > ws {
                    self.words[i - ws - 1] >> (64 - bs)
                } else {
                    0
                };
                out.words[i] |= lo | hi;
            }
            let extra = self.words.len() * 64 - (self.cap + 1);
            if extra > 0 {
                let last = self.words.len() - 1;
                out.words[last] &= u64::MAX >> extra;
            }
        }
        out
    }
}

fn sums_excluding(pieces: &[Piece], skip: Option<usize>, cap: usize) -> SumSet {
    pieces
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .fold(SumSet::zero(cap), |acc, (_, p)| acc.with_item(p.len))
}

/// Penalty `t(ℓ − t)/ℓ` kept as an exact fraction `(num, den)`.
fn penalty(keep: usize, len: usize) -> (u128, u128) {
    ((keep * (len - keep)) as u128, len as u128)
}

fn plan(ctx: &ScoreContext, budget: usize) -> Plan {
    let mut classes: [Vec<Piece>; 4] = Default::default();
    for s in ctx.segments() {
        if s.rating < 0 || s.is_empty() {
            continue;
        }
        let len = if s.repetitive { s.len().min(ctx.beta) } else { s.len() };
        classes[s.rating as usize].push(Piece { start: s.start, len });
    }
    let mut fixed = Vec::new();
    let mut remaining = budget;
    for rating in (0..=3).rev() {
        if remaining == 0 {
            break;
        }
        let pieces = std::mem::take(&mut classes[rating]);
        let total: usize = pieces.iter().map(|p| p.len).sum();
        if total <= remaining {
            for p in &pieces {
                fixed.extend(p.prefix(p.len));
            }
            remaining -= total;
            continue;
        }
        let options = best_breaks(&pieces, remaining);
        return Plan {
            fixed,
            split: Some(Split {
                pieces,
                remaining,
                options,
            }),
        };
    }
    Plan { fixed, split: None }
}

fn best_breaks(pieces: &[Piece], remaining: usize) -> Vec<Break> {
    if sums_excluding(pieces, None, remaining).contains(remaining) {
        return vec![Break::None];
    }
    let mut best: Option<(u128, u128)> = None;
    let mut options = Vec::new();
    for (index, p) in pieces.iter().enumerate() {
        let others = sums_excluding(pieces, Some(index), remaining);
        for keep in 1..p.len.min(remaining + 1) {
            if !others.contains(remaining - keep) {
                continue;
            }
            let (num, den) = penalty(keep, p.len);
            let ord = match best {
                None => std::cmp::Ordering::Less,
                Some((bn, bd)) => (num * bd).cmp(&(bn * den)),
            };
            match ord {
                std::cmp::Ordering::Less => {
                    best = Some((num, den));
                    options.clear();
                    options.push(Break::Piece { index, keep });
                }
                std::cmp::Ordering::Equal => options.push(Break::Piece { index, keep }),
                std::cmp::Ordering::Greater => {}
            }
        }
    }
    options
}

/// Draws one exact-sum subset of `pieces` (excluding `skip`) in random order.
fn random_exact_subset<R: Rng>(
    pieces: &[Piece],
    skip: Option<usize>,
    target: usize,
    rng: &mut R,
) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..pieces.len()).filter(|&i| Some(i) != skip).collect();
    order.shuffle(rng);
    // suffix[i]: sums reachable with order[i..].
    let mut suffix = vec![SumSet::zero(target); order.len() + 1];
    for i in (0..order.len()).rev() {
        suffix[i] = suffix[i + 1].with_item(pieces[order[i]].len);
    }
    if !suffix[0].contains(target) {
        return None;
    }
    let mut left = target;
    let mut chosen = Vec::new();
    for (i, &piece) in order.iter().enumerate() {
        if left == 0 {
            break;
        }
        let len = pieces[piece].len;
        let can_take = len <= left && suffix[i + 1].contains(left - len);
        let can_skip = suffix[i + 1].contains(left);
        let take = match (can_take, can_skip) {
            (true, true) => rng.random_bool(0.5),
            (true, false) => true,
            (false, _) => false,
        };
        if take {
            chosen.push(piece);
            left -= len;
        }
    }
    Some(chosen)
}

fn draw<R: Rng>(plan: &Plan, rng: &mut R) -> Vec<usize> {
    let mut out = plan.fixed.clone();
    if let Some(split) = &plan.split {
        let option = split.options[rng.random_range(0..split.options.len())];
        let (skip, keep) = match option {
            Break::None => (None, 0),
            Break::Piece { index, keep } => (Some(index), keep),
        };
        let subset = random_exact_subset(&split.pieces, skip, split.remaining - keep, rng)
            .expect("break options are feasible by construction");
        for i in subset {
            out.extend(split.pieces[i].prefix(split.pieces[i].len));
        }
        if let Some(i) = skip {
            out.extend(split.pieces[i].prefix(keep));
        }
    }
    out.sort_unstable();
    out
}

fn check_budget(ctx: &ScoreContext, budget: usize) -> Result<()> {
    if budget == 0 || budget > ctx.n_snippets() {
        return Err(Error::Budget {
            budget,
            n: ctx.n_snippets(),
        });
    }
    Ok(())
}

/// Score shared by every ground-truth summary at `budget`.
pub fn ground_truth_score(ctx: &ScoreContext, budget: usize) -> Result<f64> {
    check_budget(ctx, budget)?;
    let plan = plan(ctx, budget);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    Ok(ctx.score(&draw(&plan, &mut rng)))
}

/// Samples up to `max_gt` distinct maximal-score summaries.
pub fn generate_from_context(
    ctx: &ScoreContext,
    video_id: &str,
    budget: usize,
    max_gt: usize,
    seed: u64,
) -> Result<GroundTruthPool> {
    check_budget(ctx, budget)?;
    if max_gt == 0 {
        return Err(Error::InvalidArgument("max_gt must be at least 1".into()));
    }
    let plan = plan(ctx, budget);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut summaries = Vec::new();
    let single = plan.split.is_none();
    let max_attempts = max_gt.saturating_mul(4).max(64);
    let mut stale = 0;
    for _ in 0..max_attempts {
        let snippets = draw(&plan, &mut rng);
        if seen.insert(snippets.clone()) {
            summaries.push(Summary::new(video_id, snippets));
            stale = 0;
        } else {
            stale += 1;
        }
        if single || summaries.len() >= max_gt || stale >= 100 {
            break;
        }
    }
    Ok(GroundTruthPool {
        video_id: video_id.to_string(),
        budget_snippets: budget,
        seed,
        summaries,
    })
}

pub fn generate_gt_summaries(
    video: &AnnotatedVideo,
    budget: usize,
    max_gt: usize,
    seed: u64,
    params: MeasureParams,
) -> Result<GroundTruthPool> {
    let ctx = ScoreContext::new(video, params)?;
    generate_from_context(&ctx, &video.id, budget, max_gt, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomMode {
    /// `budget` snippets without replacement from the whole video.
    UniformRandom,
    /// Only snippets of segments rated ≥ 0.
    PositiveOnly,
    /// Every `⌊n/budget⌋`-th snippet starting at 0.
    UniformSpaced,
}

pub fn sample_from_raster(
    raster: &crate::corpus::Raster,
    video_id: &str,
    budget: usize,
    mode: RandomMode,
    seed: u64,
) -> Result<Summary> {
    let n = raster.n_snippets();
    if budget == 0 || budget > n {
        return Err(Error::Budget { budget, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = match mode {
        RandomMode::UniformRandom => rand::seq::index::sample(&mut rng, n, budget).into_vec(),
        RandomMode::PositiveOnly => {
            let eligible: Vec<usize> = (0..n).filter(|&i| raster.rating_of(i) >= 0).collect();
            if eligible.len() < budget {
                return Err(Error::InsufficientSnippets {
                    available: eligible.len(),
                    requested: budget,
                });
            }
            rand::seq::index::sample(&mut rng, eligible.len(), budget)
                .into_iter()
                .map(|i| eligible[i])
                .collect()
        }
        RandomMode::UniformSpaced => {
            let step = n / budget;
            (0..budget).map(|i| i * step).collect()
        }
    };
    Ok(Summary::new(video_id, indices))
}

pub fn sample_random_summary(video: &AnnotatedVideo, budget: usize, mode: RandomMode, seed: u64) -> Result<Summary> {
    sample_from_raster(&video.rasterize(), &video.id, budget, mode, seed)
}
