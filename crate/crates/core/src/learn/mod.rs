//! Max-margin learning of mixture weights.
//!
//! A summary `y` of video `x` is scored by `w · f(x, y)` where
//! `f(x, y) = [Σ_{s∈y} φ(s) ; f_1(y), …, f_m(y)]` stacks the summed modular
//! feature rows and the values of the structured components. Training
//! minimises the regularized generalized hinge loss with per-video
//! subgradient steps, keeping the component weights non-negative.

mod context;
mod model;
mod train;

pub use context::{
    component_scales, hinge_loss, loss_augmented_infer, loss_augmented_infer_scaled, mixture_value, summarize_video,
    summarize_with_context, ComponentContribution, HingeBreakdown, SummaryReport, VideoContext,
};
pub use model::{ComponentWeight, FamilyWeights, GtMode, MixtureModel, ModelVariant, OptimizerKind, TrainConfig};
pub use train::{initial_weights, train, train_on_contexts, TrainingRecord};
