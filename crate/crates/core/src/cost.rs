//! Cost of transport from instantaneous rates.

use crate::data::GaitTrial;
use crate::models::{MeeModel, ModelError, RateCurve};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostOptions {
    /// Zero negative channel rates before integrating.
    pub clamp_nonneg: bool,
}

/// `1/(T m v) * integral_0^T sum_i E_i dt`, J/(kg m).
///
/// The grid covers one periodic gait cycle (`t_k = k T / grid`), so the
/// trapezoidal rule closed over the period reduces to `dt * sum_k f_k`.
pub fn cost_from_curve(curve: &RateCurve, trial: &GaitTrial, opts: &CostOptions) -> f64 {
    let mut integral = 0.0;
    for k in 0..curve.grid {
        let mut total = 0.0;
        for c in 0..curve.channels {
            let r = curve.data[c * curve.grid + k];
            total += if opts.clamp_nonneg { r.max(0.0) } else { r };
        }
        integral += total;
    }
    integral * cost_scale(trial)
}

/// Derivative of the cost with respect to any single rate sample,
/// `dt / (T m v)`.
pub fn cost_scale(trial: &GaitTrial) -> f64 {
    trial.dt() / (trial.duration * trial.subject.mass * trial.condition.speed)
}

/// Per-channel rate curve of `model` on `trial`.
pub fn rate_curve(model: &dyn MeeModel, trial: &GaitTrial, params: &[f64]) -> Result<RateCurve, ModelError> {
    model.check_arity(params)?;
    model.prepare(trial).rates(params)
}

/// Calculated metabolic cost of `trial` under `model`.
pub fn trial_cost(model: &dyn MeeModel, trial: &GaitTrial, params: &[f64], opts: &CostOptions) -> Result<f64, ModelError> {
    Ok(cost_from_curve(&rate_curve(model, trial, params)?, trial, opts))
}
