//! Metabolic energy expenditure (MEE) models for human gait.
//!
//! The crate is organised around a small set of subsystems:
//!
//! * [`data`]: trial data model, on-disk dataset format and a synthetic
//!   trial generator with analytically known costs.
//! * [`hill`] and [`models`]: Hill-type auxiliary curves and the four MEE
//!   models (`MARG68`, `MINE97`, `LICH05`, `KIMR15`), each implementing the
//!   [`models::MeeModel`] trait and registered by name in a
//!   [`models::ModelRegistry`].
//! * [`cost`]: the cost-of-transport integral over one gait cycle.
//! * [`sobol`], [`ks`] and [`sensitivity`]: quasi-Monte-Carlo sampling,
//!   bulk evaluation, behavioural filtering and KS sensitivity indices.
//! * [`metrics`]: RMSE, repeated-measures correlation and CMC.
//! * [`quasiopt`]: subject-wise leave-one-out selection of quasi-optimal
//!   parameter sets.
//! * [`deep`]: a from-scratch MLP trained under inexact supervision and the
//!   exhaustive feature-combination sweep.

pub mod cost;
pub mod data;
pub mod deep;
pub mod hill;
pub mod ks;
pub mod metrics;
pub mod models;
pub mod parallel;
pub mod quasiopt;
pub mod sensitivity;
pub mod sobol;

pub use cost::{cost_from_curve, rate_curve, trial_cost, CostOptions};
pub use data::{Dataset, GaitTrial, JointSeries, MuscleParams, MuscleSeries, Subject, TrialCondition};
pub use models::{MeeModel, ModelError, ModelParamSet, ModelRegistry, RateCurve};
