//! Metabolic energy expenditure models.
//!
//! Every model implements [`MeeModel`]. A model turns a trial into a
//! [`PreparedTrial`] once, caching whatever does not depend on the empirical
//! parameters, and the prepared trial then fills a [`RateCurve`] for any
//! parameter vector. Bulk Monte-Carlo evaluation and single evaluations go
//! through the same code path.

pub mod kimr15;
pub mod lich05;
pub mod marg68;
pub mod mine97;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::GaitTrial;

pub use kimr15::Kimr15;
pub use lich05::Lich05;
pub use marg68::Marg68;
pub use mine97::Mine97;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("{model} expects {expected} parameters, got {got}")]
    Arity { model: String, expected: usize, got: usize },
    #[error("rational function pole at v = {vbar} (denominator {denominator:e})")]
    Pole { vbar: f64, denominator: f64 },
}

/// Whether a model works on muscle or joint channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelSpace {
    Muscle,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        ParamRange { lo, hi }
    }

    /// `(-10|p|, 10|p|)` around a nonzero original value, `(-1, 1)` otherwise.
    pub fn around(original: f64) -> Self {
        if original == 0.0 {
            ParamRange::new(-1.0, 1.0)
        } else {
            let r = 10.0 * original.abs();
            ParamRange::new(-r, r)
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// A named parameter vector for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParamSet {
    pub model: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub ranges: Vec<ParamRange>,
}

impl ModelParamSet {
    pub fn original(model: &dyn MeeModel) -> Self {
        Self::with_values(model, model.original_params().to_vec())
    }

    pub fn with_values(model: &dyn MeeModel, values: Vec<f64>) -> Self {
        ModelParamSet {
            model: model.name().to_string(),
            names: model.param_names().iter().map(|s| s.to_string()).collect(),
            values,
            ranges: model.default_ranges(),
        }
    }
}

impl fmt::Display for ModelParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.model)?;
        for (i, (n, v)) in self.names.iter().zip(&self.values).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}={v:.4}")?;
        }
        write!(f, ")")
    }
}

/// Instantaneous metabolic rate per channel, W. Channel-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub channels: usize,
    pub grid: usize,
    pub data: Vec<f64>,
}

impl RateCurve {
    pub fn zeros(channels: usize, grid: usize) -> Self {
        RateCurve { channels, grid, data: vec![0.0; channels * grid] }
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.grid..(c + 1) * self.grid]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.grid..(c + 1) * self.grid]
    }

    pub(crate) fn reshape(&mut self, channels: usize, grid: usize) {
        self.channels = channels;
        self.grid = grid;
        self.data.resize(channels * grid, 0.0);
    }
}

/// A trial prepared for repeated evaluation under different parameters.
pub trait PreparedTrial: Send + Sync {
    fn trial(&self) -> &GaitTrial;

    fn channels(&self) -> usize;

    /// Fills `out` (reshaped as needed) with the per-channel rate curve.
    /// `params` has already been arity-checked.
    fn rates_into(&self, params: &[f64], out: &mut RateCurve) -> Result<(), ModelError>;

    fn rates(&self, params: &[f64]) -> Result<RateCurve, ModelError> {
        let mut out = RateCurve::zeros(self.channels(), self.trial().grid);
        self.rates_into(params, &mut out)?;
        Ok(out)
    }
}

pub trait MeeModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn space(&self) -> ChannelSpace;

    fn param_names(&self) -> &'static [&'static str];

    /// Published parameter values.
    fn original_params(&self) -> &'static [f64];

    /// Monte-Carlo sampling ranges.
    fn default_ranges(&self) -> Vec<ParamRange> {
        self.original_params().iter().map(|&p| ParamRange::around(p)).collect()
    }

    fn prepare<'t>(&self, trial: &'t GaitTrial) -> Box<dyn PreparedTrial + 't>;

    fn arity(&self) -> usize {
        self.param_names().len()
    }

    fn check_arity(&self, params: &[f64]) -> Result<(), ModelError> {
        if params.len() == self.arity() {
            Ok(())
        } else {
            Err(ModelError::Arity { model: self.name().into(), expected: self.arity(), got: params.len() })
        }
    }
}

/// Models registered by name; lookup is case-insensitive.
#[derive(Debug, Default)]
pub struct ModelRegistry {
    models: Vec<Box<dyn MeeModel>>,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The four built-in models in publication order.
    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register(Box::new(Marg68::default()));
        r.register(Box::new(Mine97));
        r.register(Box::new(Lich05::default()));
        r.register(Box::new(Kimr15));
        r
    }

    /// Adds a model, replacing any existing one with the same name.
    pub fn register(&mut self, model: Box<dyn MeeModel>) {
        self.models.retain(|m| !m.name().eq_ignore_ascii_case(model.name()));
        self.models.push(model);
    }

    pub fn get(&self, name: &str) -> Result<&dyn MeeModel, ModelError> {
        self.models
            .iter()
            .find(|m| m.name().eq_ignore_ascii_case(name))
            .map(|m| m.as_ref())
            .ok_or_else(|| ModelError::UnknownModel(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.models.iter().map(|m| m.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn MeeModel> {
        self.models.iter().map(|m| m.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        let r = ModelRegistry::builtin();
        assert_eq!(r.names(), vec!["MARG68", "MINE97", "LICH05", "KIMR15"]);
        assert_eq!(r.get("lich05").unwrap().arity(), 10);
        assert_eq!(r.get("MARG68").unwrap().arity(), 2);
        assert_eq!(r.get("Mine97").unwrap().arity(), 7);
        assert_eq!(r.get("KIMR15").unwrap().arity(), 4);
        assert!(matches!(r.get("UMBE03"), Err(ModelError::UnknownModel(_))));
    }

    #[test]
    fn default_range_rule() {
        assert_eq!(ParamRange::around(0.054), ParamRange::new(-0.54, 0.54));
        assert_eq!(ParamRange::around(-1.64), ParamRange::new(-16.4, 16.4));
        assert_eq!(ParamRange::around(0.0), ParamRange::new(-1.0, 1.0));
        let r = ModelRegistry::builtin();
        assert_eq!(r.get("MARG68").unwrap().default_ranges(), vec![ParamRange::new(-5.0, 5.0); 2]);
    }

    #[test]
    fn original_params_have_model_arity() {
        for m in ModelRegistry::builtin().iter() {
            assert_eq!(m.original_params().len(), m.arity(), "{}", m.name());
            assert!(m.check_arity(m.original_params()).is_ok());
            assert!(m.check_arity(&[1.0]).is_err());
        }
    }
}
