//! Greedy maximizers and the exhaustive oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ObjectiveMixture, Selection};
use crate::error::{Error, Result};
use crate::functions::{SetFunction, Shape};
use crate::kernels::DistanceMatrix;

pub const BRUTE_FORCE_MAX_N: usize = 22;
pub const BRUTE_FORCE_MAX_K: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreedyOptions {
    /// Priority queue of stale gains instead of a full scan per step.
    pub lazy: bool,
    /// Keep adding elements even when the best gain is not positive.
    pub fill_budget: bool,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions {
            lazy: true,
            fill_budget: false,
        }
    }
}

fn check_budget(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Budget { budget: k, n });
    }
    Ok(())
}

/// Greedy maximization under `|X| ≤ k`. Monotone objectives fill the budget;
/// others stop at the first step whose best gain is not positive.
pub fn greedy_max(obj: &ObjectiveMixture, k: usize, lazy: bool) -> Result<Selection> {
    greedy_max_with(
        obj,
        k,
        GreedyOptions {
            lazy,
            fill_budget: false,
        },
    )
}

pub fn greedy_max_with(obj: &ObjectiveMixture, k: usize, opts: GreedyOptions) -> Result<Selection> {
    let n = obj.ground_size();
    check_budget(k, n)?;
    let mut state = obj.clone();
    state.reset();
    let stop_early = !opts.fill_budget && !state.is_monotone();
    if opts.lazy {
        lazy_greedy(&mut state, k, stop_early);
    } else {
        naive_greedy(&mut state, k, stop_early);
    }
    let elements = state.selected().to_vec();
    Ok(Selection {
        value: obj.evaluate(&elements),
        elements,
    })
}

fn naive_greedy(state: &mut ObjectiveMixture, k: usize, stop_early: bool) {
    let n = state.ground_size();
    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for e in (0..n).filter(|&e| !state.is_selected(e)) {
            let g = state.lazy_gain(e) + state.exact_gain(e);
            if best.is_none_or(|(b, _)| g > b) {
                best = Some((g, e));
            }
        }
        match best {
            Some((g, _)) if stop_early && g <= 0.0 => break,
            Some((_, e)) => state.insert(e),
            None => break,
        }
    }
}

/// Heap entry ordered by value descending, then index ascending.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    element: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.element.cmp(&self.element))
    }
}

/// Lazy greedy: lazy terms keep their last gain as an upper bound; the other
/// terms are recomputed for every candidate at each step.
fn lazy_greedy(state: &mut ObjectiveMixture, k: usize, stop_early: bool) {
    let n = state.ground_size();
    let mut bound: Vec<f64> = (0..n).map(|e| state.lazy_gain(e)).collect();
    let mut fresh_at: Vec<usize> = vec![0; n];
    let has_exact = state.has_exact_terms();
    let mut exact = vec![0.0; n];
    for step in 0..k {
        if has_exact {
            for e in (0..n).filter(|&e| !state.is_selected(e)) {
                exact[e] = state.exact_gain(e);
            }
        }
        let mut heap: BinaryHeap<Candidate> = (0..n)
            .filter(|&e| !state.is_selected(e))
            .map(|e| Candidate {
                value: bound[e] + exact[e],
                element: e,
            })
            .collect();
        let mut chosen = None;
        while let Some(top) = heap.pop() {
            let e = top.element;
            if fresh_at[e] == step {
                chosen = Some(top);
                break;
            }
            bound[e] = state.lazy_gain(e);
            fresh_at[e] = step;
            heap.push(Candidate {
                value: bound[e] + exact[e],
                element: e,
            });
        }
        match chosen {
            Some(c) if stop_early && c.value <= 0.0 => break,
            Some(c) => {
                state.insert(c.element);
                // Every bound is now stale.
            }
            None => break,
        }
    }
}

/// Randomized greedy: each of the `k` steps draws uniformly among the
/// `min(k, remaining)` best elements; a drawn element with negative gain is
/// skipped, so that step adds nothing.
pub fn randomized_greedy_max(obj: &ObjectiveMixture, k: usize, seed: u64) -> Result<Selection> {
    let n = obj.ground_size();
    check_budget(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = obj.clone();
    state.reset();
    for _ in 0..k {
        let mut ranked: Vec<(f64, usize)> = (0..n)
            .filter(|&e| !state.is_selected(e))
            .map(|e| (state.lazy_gain(e) + state.exact_gain(e), e))
            .collect();
        if ranked.is_empty() {
            break;
        }
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let pool = k.min(ranked.len());
        let (g, e) = ranked[rng.random_range(0..pool)];
        if g >= 0.0 {
            state.insert(e);
        }
    }
    let elements = state.selected().to_vec();
    Ok(Selection {
        value: obj.evaluate(&elements),
        elements,
    })
}

/// Max-min dispersion greedy: the farthest pair, then repeatedly the element
/// farthest from the chosen set.
pub fn dispersion_greedy_max(dist: &DistanceMatrix, k: usize) -> Result<Selection> {
    let n = dist.n();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "dispersion greedy needs k ≥ 2, got {k}"
        )));
    }
    check_budget(k, n)?;
    let mut pair = (0, 1);
    let mut far = f64::NEG_INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            if dist.get(i, j) > far {
                far = dist.get(i, j);
                pair = (i, j);
            }
        }
    }
    let mut chosen = vec![pair.0, pair.1];
    let mut in_set = vec![false; n];
    in_set[pair.0] = true;
    in_set[pair.1] = true;
    let mut nearest: Vec<f64> = (0..n).map(|v| dist.get(v, pair.0).min(dist.get(v, pair.1))).collect();
    while chosen.len() < k {
        let mut best: Option<usize> = None;
        for e in (0..n).filter(|&e| !in_set[e]) {
            if best.is_none_or(|b| nearest[e] > nearest[b]) {
                best = Some(e);
            }
        }
        let Some(e) = best else { break };
        chosen.push(e);
        in_set[e] = true;
        for (v, near) in nearest.iter_mut().enumerate() {
            *near = near.min(dist.get(v, e));
        }
    }
    Ok(Selection {
        value: dist.min_pairwise(&chosen).unwrap_or(0.0),
        elements: chosen,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// Greedy (or randomized greedy) on the non-dispersion terms.
    Rest,
    /// Dispersion greedy on the dispersion term.
    Dispersion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestOfTwo {
    pub selection: Selection,
    pub chosen: Part,
    /// Full-objective values of the two candidate solutions, when computed.
    pub rest_value: Option<f64>,
    pub dispersion_value: Option<f64>,
}

/// Optimizes the non-dispersion part and the single dispersion term
/// separately and keeps whichever scores better on the full objective.
pub fn best_of_two(obj: &ObjectiveMixture, k: usize, seed: u64) -> Result<BestOfTwo> {
    check_budget(k, obj.ground_size())?;
    let (disp, rest) = obj.split_dispersion();
    if disp.len() > 1 {
        return Err(Error::NotSeparable(format!(
            "{} dispersion terms; at most one is supported",
            disp.len()
        )));
    }
    let disp_term = disp.terms().first().filter(|t| t.weight > 0.0);
    let rest_active = rest.terms().iter().any(|t| t.weight != 0.0);

    let rest_sel = if rest_active || disp_term.is_none() {
        Some(if rest.is_monotone() {
            greedy_max(&rest, k, true)?
        } else {
            randomized_greedy_max(&rest, k, seed)?
        })
    } else {
        None
    };
    let disp_sel = match disp_term {
        Some(t) if k >= 2 => {
            let dist = t
                .func
                .distances()
                .ok_or_else(|| Error::NotSeparable("dispersion term without distances".into()))?;
            Some(dispersion_greedy_max(dist, k)?)
        }
        _ => None,
    };
    let score = |s: &Selection| Selection {
        value: obj.evaluate(&s.elements),
        elements: s.elements.clone(),
    };
    let rest_full = rest_sel.as_ref().map(score);
    let disp_full = disp_sel.as_ref().map(score);
    let (selection, chosen) = match (&rest_full, &disp_full) {
        (Some(r), Some(d)) if d.value > r.value => (d.clone(), Part::Dispersion),
        (Some(r), _) => (r.clone(), Part::Rest),
        (None, Some(d)) => (d.clone(), Part::Dispersion),
        (None, None) => unreachable!("one part always runs"),
    };
    Ok(BestOfTwo {
        selection,
        chosen,
        rest_value: rest_full.map(|s| s.value),
        dispersion_value: disp_full.map(|s| s.value),
    })
}

/// Greedy on the full objective, compared with greedy on the non-dispersion
/// terms alone and with dispersion greedy on each dispersion term. Returns
/// the candidate with the highest full-objective value; the full-objective
/// greedy wins ties.
pub fn split_greedy_max(obj: &ObjectiveMixture, k: usize, opts: GreedyOptions) -> Result<Selection> {
    let full = greedy_max_with(obj, k, opts)?;
    let mut best = Selection {
        value: obj.evaluate(&full.elements),
        elements: full.elements,
    };
    let (disp, rest) = obj.split_dispersion();
    let active: Vec<_> = disp.terms().iter().filter(|t| t.weight > 0.0).collect();
    if active.is_empty() {
        return Ok(best);
    }
    let mut candidates = Vec::new();
    if !rest.is_empty() {
        candidates.push(greedy_max_with(&rest, k, opts)?);
    }
    if k >= 2 {
        for t in active {
            if let Some(dist) = t.func.distances() {
                candidates.push(dispersion_greedy_max(dist, k)?);
            }
        }
    }
    for c in candidates {
        let value = obj.evaluate(&c.elements);
        if value > best.value {
            best = Selection {
                value,
                elements: c.elements,
            };
        }
    }
    Ok(best)
}

/// Exact maximizer by enumeration. Monotone objectives and objectives with a
/// dispersion term are searched over sets of size exactly `k`, others over
/// sizes `0..=k`. Ties keep the lexicographically first set.
pub fn brute_force_opt(obj: &ObjectiveMixture, k: usize) -> Result<Selection> {
    let n = obj.ground_size();
    if n > BRUTE_FORCE_MAX_N || k > BRUTE_FORCE_MAX_K {
        return Err(Error::InstanceTooLarge { n, k });
    }
    check_budget(k, n)?;
    let exact = obj.is_monotone()
        || obj
            .terms()
            .iter()
            .any(|t| t.weight != 0.0 && t.func.shape() == Shape::Dispersion);
    let sizes = if exact { k..=k } else { 0..=k };
    let mut best = Selection {
        elements: Vec::new(),
        value: f64::NEG_INFINITY,
    };
    let mut current = Vec::with_capacity(k);
    for size in sizes {
        enumerate(n, size, 0, &mut current, &mut |set| {
            let v = obj.evaluate(set);
            if v > best.value {
                best = Selection {
                    elements: set.to_vec(),
                    value: v,
                };
            }
        });
    }
    Ok(best)
}

fn enumerate(n: usize, size: usize, from: usize, current: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if current.len() == size {
        visit(current);
        return;
    }
    let need = size - current.len();
    for e in from..=n - need {
        current.push(e);
        enumerate(n, size, e + 1, current, visit);
        current.pop();
    }
}
