mod common;

use dsvs::corpus::AnnotatedVideo;
use dsvs::functions::GridConfig;
use dsvs::learn::{
    hinge_loss, initial_weights, loss_augmented_infer, loss_augmented_infer_scaled, mixture_value, summarize_video,
    summarize_with_context, train, GtMode, MixtureModel, ModelVariant, OptimizerKind, TrainConfig, VideoContext,
};
use dsvs::measure::MeasureParams;
use proptest::prelude::*;

use common::random_video;

fn videos(count: usize, n: usize, seed: u64) -> Vec<AnnotatedVideo> {
    (0..count)
        .map(|i| random_video(&format!("v{i}"), n, seed + i as u64))
        .collect()
}

fn config(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        seed,
        max_gt: 20,
        ..TrainConfig::default()
    }
}

fn fit(vs: &[AnnotatedVideo], config: &TrainConfig) -> MixtureModel {
    let grid = GridConfig::default_for_video(&vs[0]);
    train(vs, &[], &grid, "toy", config).unwrap().0
}

fn norm(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn initial_weights_follow_variant() {
    assert_eq!(
        initial_weights(3, 4, ModelVariant::Full),
        vec![0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25]
    );
    assert_eq!(initial_weights(2, 2, ModelVariant::ModularOnly), vec![0.0; 4]);
    assert_eq!(initial_weights(1, 2, ModelVariant::StructuredOnly), vec![0.0, 0.5, 0.5]);
    assert_eq!(initial_weights(2, 0, ModelVariant::Full), vec![0.0, 0.0]);
}

#[test]
fn training_is_deterministic_under_seed() {
    let vs = videos(3, 50, 10);
    let grid = GridConfig::default_for_video(&vs[0]);
    let (a, ra) = train(&vs, &vs[..1], &grid, "toy", &config(4, 7)).unwrap();
    let (b, rb) = train(&vs, &vs[..1], &grid, "toy", &config(4, 7)).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    assert_eq!(ra.epoch_hinge.len(), 4);
    assert_eq!(ra.epoch_heldout_loss.len(), 4);
    assert!(ra.epoch_heldout_loss.iter().all(|l| l.is_some()));
}

#[test]
fn frozen_weights_stay_zero() {
    let vs = videos(2, 50, 20);
    let m = fit(
        &vs,
        &TrainConfig {
            variant: ModelVariant::ModularOnly,
            ..config(3, 1)
        },
    );
    assert!(m.w2_flat().iter().all(|&x| x == 0.0));
    let s = fit(
        &vs,
        &TrainConfig {
            variant: ModelVariant::StructuredOnly,
            ..config(3, 1)
        },
    );
    assert!(s.w1_flat().iter().all(|&x| x == 0.0));
    assert!(s.w2_flat().iter().all(|&x| x >= 0.0));
}

#[test]
fn singleton_pools_make_gt_modes_agree() {
    let vs = videos(3, 40, 30);
    let base = TrainConfig {
        max_gt: 1,
        ..config(3, 5)
    };
    let random = fit(
        &vs,
        &TrainConfig {
            gt_mode: GtMode::Random,
            ..base.clone()
        },
    );
    let fixed = fit(
        &vs,
        &TrainConfig {
            gt_mode: GtMode::Fixed,
            ..base
        },
    );
    assert_eq!(random.weights(), fixed.weights());
}

#[test]
fn heavy_modular_regularization_shrinks_w1() {
    let vs = videos(3, 50, 40);
    let base = TrainConfig {
        optimizer: OptimizerKind::Sgd,
        learning_rate: 0.02,
        ..config(10, 3)
    };
    let free = fit(
        &vs,
        &TrainConfig {
            lambda1: 0.0,
            ..base.clone()
        },
    );
    let heavy = fit(&vs, &TrainConfig { lambda1: 20.0, ..base });
    assert!(norm(&free.w1_flat()) > 0.0);
    assert!(
        norm(&heavy.w1_flat()) < 0.2 * norm(&free.w1_flat()),
        "{} vs {}",
        norm(&heavy.w1_flat()),
        norm(&free.w1_flat())
    );
}

#[test]
fn saved_model_summarizes_identically() {
    let vs = videos(2, 50, 50);
    let m = fit(&vs, &config(3, 2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    m.save(&path).unwrap();
    let back = MixtureModel::load(&path).unwrap();
    assert_eq!(back, m);
    let probe = random_video("probe", 45, 999);
    let (a, ra) = summarize_video(&m, &probe, 20.0, MeasureParams::default()).unwrap();
    let (b, rb) = summarize_video(&back, &probe, 20.0, MeasureParams::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    assert_eq!(a.len(), 9);
}

#[test]
fn report_parts_add_up() {
    let vs = videos(2, 50, 60);
    let m = fit(&vs, &config(3, 4));
    let ctx = VideoContext::new(&vs[0], &m.grid(), 15.0, MeasureParams::default()).unwrap();
    let (summary, report) = summarize_with_context(&m.weights(), &ctx).unwrap();
    let parts = report.modular_contribution + report.components.iter().map(|c| c.weighted).sum::<f64>();
    assert!((parts - report.objective).abs() < 1e-9);
    let direct = mixture_value(&m, &ctx, &summary.snippet_indices).unwrap();
    assert!((direct - report.objective).abs() < 1e-9 * direct.abs().max(1.0));
    assert!((report.score_loss - (1.0 - report.normalized_score)).abs() < 1e-12);
}

#[test]
fn ground_truth_hinge_at_zero_weights() {
    let v = random_video("h", 50, 70);
    let grid = GridConfig::default_for_video(&v);
    let ctx = VideoContext::new(&v, &grid, 15.0, MeasureParams::default())
        .unwrap()
        .with_pool(5, 0)
        .unwrap();
    let w = vec![0.0; ctx.weight_dim()];
    let gt = &ctx.pool.as_ref().unwrap().summaries[0].snippet_indices;
    assert!(ctx.margin(gt).abs() < 1e-12);
    let h = hinge_loss(&w, &ctx, gt).unwrap();
    assert_eq!(h.model_gt, 0.0);
    assert_eq!(h.model_predicted, 0.0);
    assert!(h.value >= 0.0 && h.raw == h.margin_predicted);
    assert_eq!(h.predicted.len(), ctx.budget);
}

#[test]
fn hinge_recomputes_from_its_parts() {
    let vs = videos(2, 50, 80);
    let m = fit(&vs, &config(3, 6));
    let w = m.weights();
    let ctx = VideoContext::new(&vs[1], &m.grid(), 15.0, MeasureParams::default())
        .unwrap()
        .with_pool(5, 1)
        .unwrap();
    let gt = ctx.pool.as_ref().unwrap().summaries[0].snippet_indices.clone();
    let h = hinge_loss(&w, &ctx, &gt).unwrap();
    let dot = |f: &[f64]| f.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let tol = |x: f64| 1e-9 * x.abs().max(1.0);
    assert!((dot(&h.features_predicted) - h.model_predicted).abs() < tol(h.model_predicted));
    assert!((ctx.value(&w, &h.predicted).unwrap() - h.model_predicted).abs() < tol(h.model_predicted));
    assert!((ctx.value(&w, &gt).unwrap() - h.model_gt).abs() < tol(h.model_gt));
    assert!((ctx.margin(&h.predicted) - h.margin_predicted).abs() < 1e-12);
    let raw = h.model_predicted + h.margin_predicted - h.model_gt;
    assert!((raw - h.raw).abs() < tol(raw));
    assert_eq!(h.value, raw.max(0.0));
    assert_eq!(h.clamped, raw < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn inference_fills_the_budget(seed in 0u64..500, n in 20usize..60, pct in 5.0f64..40.0) {
        let v = random_video("p", n, seed);
        let grid = GridConfig::default_for_video(&v);
        let ctx = VideoContext::new(&v, &grid, pct, MeasureParams::default()).unwrap();
        let w: Vec<f64> = (0..ctx.weight_dim())
            .map(|i| if i < ctx.phi.dim() { ((seed + i as u64) % 7) as f64 - 3.0 } else { 0.3 })
            .collect();
        let (s, r) = summarize_with_context(&w, &ctx).unwrap();
        prop_assert_eq!(s.len(), ctx.budget);
        prop_assert!((0.0..=1.0).contains(&r.score_loss));
        prop_assert_eq!(loss_augmented_infer(&w, &ctx).unwrap().sorted().len(), ctx.budget);
    }

    #[test]
    fn positive_rescaling_keeps_the_summary(seed in 0u64..500, c in 0.1f64..10.0) {
        let v = random_video("p", 40, seed);
        let grid = GridConfig::default_for_video(&v);
        let ctx = VideoContext::new(&v, &grid, 15.0, MeasureParams::default()).unwrap();
        let w: Vec<f64> = (0..ctx.weight_dim())
            .map(|i| if i < ctx.phi.dim() { (i as f64 * 0.37 + seed as f64).sin() } else { 0.25 + (i % 3) as f64 * 0.5 })
            .collect();
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let a = summarize_with_context(&w, &ctx).unwrap().0;
        let b = summarize_with_context(&scaled, &ctx).unwrap().0;
        prop_assert_eq!(a, b);
        let plain = loss_augmented_infer(&w, &ctx).unwrap().sorted();
        let both = loss_augmented_infer_scaled(&scaled, &ctx, c).unwrap().sorted();
        prop_assert_eq!(plain, both);
    }

    #[test]
    fn trained_component_weights_are_nonnegative(seed in 0u64..100) {
        let vs = videos(2, 30, 1000 + seed);
        let config = TrainConfig { lambda2: 0.5, ..config(2, seed) };
        let grid = GridConfig::default_for_video(&vs[0]);
        let (m, record) = train(&vs, &[], &grid, "toy", &config).unwrap();
        prop_assert!(m.w2_flat().iter().all(|&x| x >= 0.0));
        prop_assert!(record.epoch_hinge.iter().all(|&h| h >= 0.0));
        prop_assert!(record.epoch_min_w2.iter().all(|&x| x >= 0.0));
    }
}
