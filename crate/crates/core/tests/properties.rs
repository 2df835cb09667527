mod common;

use dsvs::corpus::{budget_for_len, Summary};
use dsvs::gtgen::{generate_gt_summaries, ground_truth_score, sample_random_summary, RandomMode};
use dsvs::measure::{MeasureParams, ScoreBounds, ScoreContext};
use dsvs::optimize::{greedy_max, randomized_greedy_max, ObjectiveMixture};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_component, random_subset, random_video, rel_close};

const MONOTONE: [&str; 4] = ["set_cover", "prob_set_cover", "facility_location", "saturated_coverage"];

fn mixture(seed: u64, n: usize) -> ObjectiveMixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obj = ObjectiveMixture::new(n);
    for (i, kind) in ["facility_location", "set_cover", "continuity", "modular"]
        .iter()
        .enumerate()
    {
        obj.push(random_component(kind, &mut rng, n), 0.5 + i as f64 * 0.25)
            .unwrap();
    }
    obj
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raster_partitions_the_video(n in 1usize..80, seed in 0u64..10_000) {
        let v = random_video("r", n, seed);
        let r = v.rasterize();
        prop_assert_eq!(r.segments.iter().map(|s| s.len()).sum::<usize>(), n);
        prop_assert_eq!(r.segment_of.len(), n);
        for (i, &s) in r.segment_of.iter().enumerate() {
            prop_assert!(r.segments[s].contains(i));
        }
        for w in r.segments.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn budget_is_monotone(n in 1usize..2000, pct in 0.5f64..99.0, dp in 0.0f64..1.0, dn in 0usize..50) {
        let b = budget_for_len(n, pct).unwrap();
        prop_assert!(b >= 1 && b <= n);
        prop_assert!(budget_for_len(n, pct + dp).unwrap() >= b);
        prop_assert!(budget_for_len(n + dn, pct).unwrap() >= b);
    }

    #[test]
    fn normalization_is_monotone(seed in 0u64..10_000, a in -200.0f64..200.0, d in 0.0f64..50.0) {
        let v = random_video("n", 40, seed);
        let ctx = ScoreContext::new(&v, MeasureParams::default()).unwrap();
        let bounds = ScoreBounds::for_context(&ctx, 6).unwrap();
        let (lo, hi) = (bounds.normalize(a), bounds.normalize(a + d));
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi >= lo);
        prop_assert_eq!(bounds.normalize(bounds.s_max), 1.0);
        prop_assert_eq!(bounds.normalize(bounds.s_min), 0.0);
    }

    #[test]
    fn negative_snippets_always_cost(seed in 0u64..10_000, p in 0.0f64..0.6) {
        let v = random_video("c", 40, seed);
        let ctx = ScoreContext::new(&v, MeasureParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_subset(&mut rng, 40, p);
        let base = ctx.score(&y);
        for e in (0..40).filter(|e| !y.contains(e)) {
            let seg = &ctx.segments()[v.rasterize().segment_of[e]];
            let mut z = y.clone();
            z.push(e);
            let gain = ctx.score(&z) - base;
            if seg.rating < 0 {
                prop_assert!(gain < 0.0);
            } else {
                prop_assert!(gain >= 0.0);
            }
        }
    }

    #[test]
    fn decomposition_sums_to_score(seed in 0u64..10_000, p in 0.0f64..1.0) {
        let v = random_video("d", 50, seed);
        let ctx = ScoreContext::new(&v, MeasureParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let y = random_subset(&mut rng, 50, p);
        let (f, g) = ctx.decompose(&y);
        prop_assert!(rel_close(f + g, ctx.score(&y), 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ground_truth_pools_tie_and_grow_with_budget(seed in 0u64..10_000, n in 10usize..60) {
        let v = random_video("g", n, seed);
        let params = MeasureParams::default();
        let ctx = ScoreContext::new(&v, params).unwrap();
        let beta = params.beta_snips(v.snippet_seconds);
        let available: usize = ctx
            .segments()
            .iter()
            .filter(|s| s.rating >= 0)
            .map(|s| if s.repetitive { s.len().min(beta) } else { s.len() })
            .sum();
        let mut last = f64::NEG_INFINITY;
        for budget in 1..=n.min(20) {
            let pool = generate_gt_summaries(&v, budget, 8, seed, params).unwrap();
            prop_assert!(!pool.is_empty());
            let best = ground_truth_score(&ctx, budget).unwrap();
            for s in &pool.summaries {
                prop_assert_eq!(s.len(), budget.min(available));
                prop_assert!(rel_close(ctx.score(&s.snippet_indices), best, 1e-9));
            }
            prop_assert!(best >= last - 1e-9 * best.abs().max(1.0));
            last = best;
            prop_assert_eq!(&pool, &generate_gt_summaries(&v, budget, 8, seed, params).unwrap());
        }
    }

    #[test]
    fn ground_truth_beats_positive_random(seed in 0u64..10_000, pct in 5.0f64..40.0) {
        let v = random_video("s", 50, seed);
        prop_assume!(!v.rasterize().has_constant_ratings());
        let params = MeasureParams::default();
        let ctx = ScoreContext::new(&v, params).unwrap();
        let budget = budget_for_len(50, pct).unwrap();
        let best = ground_truth_score(&ctx, budget).unwrap();
        for s in 0..50 {
            let Ok(r) = sample_random_summary(&v, budget, RandomMode::PositiveOnly, s) else { break };
            prop_assert!(ctx.score(&r.snippet_indices) <= best + 1e-9 * best.abs().max(1.0));
        }
    }

    #[test]
    fn monotone_components_grow_under_inclusion(seed in 0u64..10_000, n in 4usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for kind in MONOTONE {
            let f = random_component(kind, &mut rng, n);
            let a = random_subset(&mut rng, n, 0.3);
            let mut b = a.clone();
            b.extend(random_subset(&mut rng, n, 0.3).into_iter().filter(|e| !a.contains(e)));
            prop_assert!(f.evaluate(&a) <= f.evaluate(&b) + 1e-9, "{}", kind);
        }
    }

    #[test]
    fn greedy_respects_the_budget(seed in 0u64..10_000, n in 2usize..40, frac in 0.05f64..1.0) {
        let k = ((n as f64 * frac).ceil() as usize).clamp(1, n);
        let obj = mixture(seed, n);
        let a = greedy_max(&obj, k, true).unwrap();
        prop_assert!(a.elements.len() <= k);
        prop_assert!(a.elements.iter().all(|&e| e < n));
        let mut s = a.sorted();
        s.dedup();
        prop_assert_eq!(s.len(), a.elements.len());
        prop_assert_eq!(&a, &greedy_max(&obj, k, true).unwrap());
        prop_assert_eq!(a.sorted(), greedy_max(&obj, k, false).unwrap().sorted());
        let r = randomized_greedy_max(&obj, k, seed).unwrap();
        prop_assert!(r.elements.len() <= k);
        prop_assert_eq!(r, randomized_greedy_max(&obj, k, seed).unwrap());
    }

    #[test]
    fn summaries_are_sorted_sets(ids in proptest::collection::vec(0usize..100, 0..40)) {
        let s = Summary::new("v", ids.clone());
        prop_assert!(s.snippet_indices.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ids.iter().all(|i| s.contains(*i)));
    }
}
