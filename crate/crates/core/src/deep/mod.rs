//! Per-channel dense networks trained under inexact supervision.
//!
//! One network is shared by every muscle (or joint) and predicts an
//! instantaneous mass-specific rate (W/kg) per channel and sample. Only the
//! cycle-averaged cost of a trial is observed, so the loss is the squared
//! error between the aggregated cost and the measured cost.

mod features;
mod mlp;
mod scaler;
mod sweep;
mod train;

use thiserror::Error;

pub use features::{
    enumerate_feature_sets, trial_features, FeatureSet, FeatureSpace, TrialInputs, JOINT_FEATURES, MUSCLE_FEATURES,
};
pub use mlp::{Activation, Adam, ForwardCache, Gradients, Layer, Mlp};
pub use scaler::Scaler;
pub use sweep::{feature_sweep, loo_predictions, tune, SearchSpace, SweepBudget, SweepReport, SweepRow};
pub use train::{
    aggregate_cost, batch_loss_grad, examples, mass_specific_cost, predict_example, split_indices, train_inexact, EpochStats, Example,
    MlpSpec, TrainedMlp,
};

#[derive(Debug, Error)]
pub enum DeepError {
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("input width mismatch: expected multiple of {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("invalid feature set: {0}")]
    FeatureSet(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("leave-one-out needs >= 2 subjects, found {0}")]
    TooFewSubjects(usize),
    #[error(transparent)]
    Metric(#[from] crate::metrics::MetricError),
}
