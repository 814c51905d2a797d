//! Quasi-Monte-Carlo exploration of a model's parameter space and
//! Monte-Carlo-filtering sensitivity indices.
//!
//! Parameter sets are drawn from a Sobol sequence scaled to per-parameter
//! ranges. Every set is evaluated on every trial; the `K` sets with the
//! lowest RMSE form the behavioural set, and each parameter's index is the
//! KS distance between its behavioural and full-sample distributions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{cost_from_curve, CostOptions};
use crate::data::Dataset;
use crate::ks::{ks_two_sample, KsError};
use crate::metrics::rmse_slices;
use crate::models::{MeeModel, ModelError, ParamRange, PreparedTrial, RateCurve};
use crate::parallel::with_jobs;
use crate::sobol::{Sobol, SobolError};

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error(transparent)]
    Sobol(#[from] SobolError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ks(#[from] KsError),
    #[error("invalid range for parameter {index}: lo {lo} >= hi {hi}")]
    Range { index: usize, lo: f64, hi: f64 },
    #[error("{expected} ranges for {got} columns")]
    RangeCount { expected: usize, got: usize },
    #[error("behavioural set of {k} requested but only {valid} samples are valid")]
    TooFewValid { k: usize, valid: usize },
    #[error("behavioural set size must be >= 1")]
    EmptyBehavioural,
}

/// Parameter samples, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    pub names: Vec<String>,
    pub ranges: Vec<ParamRange>,
    pub rows: Vec<Vec<f64>>,
}

impl SampleMatrix {
    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_params(&self) -> usize {
        self.ranges.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// Affine map of unit-cube points onto `ranges`, column by column.
pub fn scale_to_ranges(points: &[Vec<f64>], ranges: &[ParamRange]) -> Result<Vec<Vec<f64>>, SamplingError> {
    for (index, r) in ranges.iter().enumerate() {
        if !(r.lo < r.hi) {
            return Err(SamplingError::Range { index, lo: r.lo, hi: r.hi });
        }
    }
    points
        .iter()
        .map(|p| {
            if p.len() != ranges.len() {
                return Err(SamplingError::RangeCount { expected: p.len(), got: ranges.len() });
            }
            Ok(p.iter().zip(ranges).map(|(&u, r)| r.lo + u * (r.hi - r.lo)).collect())
        })
        .collect()
}

/// Sobol sampling settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub n_samples: usize,
    /// First sequence index used. The default of 1 skips the origin, which
    /// would sit exactly on every lower bound.
    pub skip: u64,
    /// Digital-shift seed; 0 is the plain sequence.
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan { n_samples: 100_000, skip: 1, seed: 0 }
    }
}

pub fn sobol_samples(model: &dyn MeeModel, ranges: &[ParamRange], plan: &SamplingPlan) -> Result<SampleMatrix, SamplingError> {
    if ranges.len() != model.arity() {
        return Err(SamplingError::RangeCount { expected: model.arity(), got: ranges.len() });
    }
    let unit = Sobol::with_digital_shift(model.arity(), plan.seed)?.points(plan.skip, plan.n_samples)?;
    Ok(SampleMatrix {
        names: model.param_names().iter().map(|s| s.to_string()).collect(),
        ranges: ranges.to_vec(),
        rows: scale_to_ranges(&unit, ranges)?,
    })
}

/// Calculated cost of every trial under every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub n_samples: usize,
    pub n_trials: usize,
    /// Row-major `n_samples x n_trials`. A row is all NaN when the sample
    /// failed (model error or non-finite cost on any trial).
    pub costs: Vec<f64>,
}

impl CostMatrix {
    pub fn row(&self, s: usize) -> &[f64] {
        &self.costs[s * self.n_trials..(s + 1) * self.n_trials]
    }

    pub fn is_valid(&self, s: usize) -> bool {
        !self.row(s)[0].is_nan()
    }

    /// Per-sample RMSE against `measured` over `trials` (all when `None`).
    /// Invalid samples get `+inf`.
    pub fn rmse(&self, measured: &[f64], trials: Option<&[usize]>) -> Vec<f64> {
        let all: Vec<usize>;
        let idx = match trials {
            Some(t) => t,
            None => {
                all = (0..self.n_trials).collect();
                &all
            }
        };
        let meas: Vec<f64> = idx.iter().map(|&i| measured[i]).collect();
        let mut calc = vec![0.0; idx.len()];
        (0..self.n_samples)
            .map(|s| {
                if !self.is_valid(s) {
                    return f64::INFINITY;
                }
                let row = self.row(s);
                for (c, &i) in calc.iter_mut().zip(idx) {
                    *c = row[i];
                }
                rmse_slices(&calc, &meas)
            })
            .collect()
    }
}

/// Evaluates every sample on every trial with `jobs` workers. The result
/// does not depend on scheduling.
pub fn mc_costs(
    model: &dyn MeeModel,
    dataset: &Dataset,
    samples: &SampleMatrix,
    opts: &CostOptions,
    jobs: usize,
) -> Result<CostMatrix, SamplingError> {
    if samples.n_params() != model.arity() {
        return Err(ModelError::Arity { model: model.name().into(), expected: model.arity(), got: samples.n_params() }.into());
    }
    let prepared: Vec<Box<dyn PreparedTrial + '_>> = dataset.trials.iter().map(|t| model.prepare(t)).collect();
    let n_trials = prepared.len();
    let mut costs = vec![0.0; samples.n_samples() * n_trials];
    with_jobs(jobs, || {
        costs
            .par_chunks_mut(n_trials.max(1))
            .zip(samples.rows.par_iter())
            .for_each_init(
                || RateCurve::zeros(0, 0),
                |buf, (out, params)| {
                    let ok = prepared.iter().zip(out.iter_mut()).all(|(p, o)| {
                        if p.rates_into(params, buf).is_err() {
                            return false;
                        }
                        *o = cost_from_curve(buf, p.trial(), opts);
                        o.is_finite()
                    });
                    if !ok {
                        out.fill(f64::NAN);
                    }
                },
            )
    });
    Ok(CostMatrix { n_samples: samples.n_samples(), n_trials, costs })
}

/// RMSE of every sample over all trials; failed samples get `+inf`.
pub fn mc_evaluate(
    model: &dyn MeeModel,
    dataset: &Dataset,
    samples: &SampleMatrix,
    opts: &CostOptions,
    jobs: usize,
) -> Result<Vec<f64>, SamplingError> {
    Ok(mc_costs(model, dataset, samples, opts, jobs)?.rmse(&dataset.measured_costs(), None))
}

/// Indices of the `k` smallest finite RMSE values, ties to the lower index,
/// in ascending RMSE order.
pub fn behavioural_split(rmse: &[f64], k: usize) -> Result<Vec<usize>, SamplingError> {
    if k == 0 {
        return Err(SamplingError::EmptyBehavioural);
    }
    let mut valid: Vec<usize> = (0..rmse.len()).filter(|&i| rmse[i].is_finite()).collect();
    if valid.len() < k {
        return Err(SamplingError::TooFewValid { k, valid: valid.len() });
    }
    valid.sort_by(|&a, &b| rmse[a].total_cmp(&rmse[b]).then(a.cmp(&b)));
    valid.truncate(k);
    Ok(valid)
}

/// What the behavioural subsample is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// Full sample (behavioural included).
    #[default]
    All,
    /// Non-behavioural samples only.
    Rest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityIndex {
    pub name: String,
    /// KS statistic in [0, 1].
    pub statistic: f64,
    pub p_value: f64,
}

/// KS index per parameter column.
///
/// With [`Reference::All`] the statistic is measured against the full
/// sample. Because the behavioural set is part of that sample, the two are
/// not independent; the p-value therefore comes from the equivalent
/// behavioural-versus-rest test, whose statistic differs only by the
/// constant factor `n / (n - K)`.
pub fn sensitivity_indices(
    samples: &SampleMatrix,
    behavioural: &[usize],
    reference: Reference,
) -> Result<Vec<SensitivityIndex>, SamplingError> {
    if behavioural.is_empty() {
        return Err(SamplingError::EmptyBehavioural);
    }
    let mut in_set = vec![false; samples.n_samples()];
    for &i in behavioural {
        in_set[i] = true;
    }
    (0..samples.n_params())
        .map(|j| {
            let column = samples.column(j);
            let behav: Vec<f64> = behavioural.iter().map(|&i| column[i]).collect();
            let rest: Vec<f64> = column.iter().zip(&in_set).filter(|(_, &b)| !b).map(|(&x, _)| x).collect();
            let vs_rest = if rest.is_empty() { None } else { Some(ks_two_sample(&behav, &rest)?) };
            let (statistic, p_value) = match reference {
                Reference::All => (
                    crate::ks::ks_statistic(&behav, &column)?,
                    vs_rest.map_or(1.0, |r| r.p_value),
                ),
                Reference::Rest => vs_rest.map_or((0.0, 1.0), |r| (r.statistic, r.p_value)),
            };
            Ok(SensitivityIndex { name: samples.names[j].clone(), statistic, p_value })
        })
        .collect()
}

/// Parameter indices ordered by decreasing statistic (ties by position).
pub fn ranking(indices: &[SensitivityIndex]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..indices.len()).collect();
    order.sort_by(|&a, &b| indices[b].statistic.total_cmp(&indices[a].statistic).then(a.cmp(&b)));
    order
}

/// Full Monte-Carlo result.
#[derive(Debug, Clone)]
pub struct McRun {
    pub model: String,
    pub plan: SamplingPlan,
    pub samples: SampleMatrix,
    pub costs: CostMatrix,
    pub rmse: Vec<f64>,
    pub behavioural: Vec<usize>,
    pub reference: Reference,
    pub indices: Vec<SensitivityIndex>,
}

/// Settings for [`run_mc`].
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub plan: SamplingPlan,
    pub ranges: Vec<ParamRange>,
    pub behavioural: usize,
    pub reference: Reference,
    pub cost: CostOptions,
    pub jobs: usize,
}

impl McConfig {
    pub fn for_model(model: &dyn MeeModel) -> Self {
        McConfig {
            plan: SamplingPlan::default(),
            ranges: model.default_ranges(),
            behavioural: 100,
            reference: Reference::All,
            cost: CostOptions::default(),
            jobs: 0,
        }
    }
}

/// Sampling, evaluation, behavioural filtering and indices in one pass.
pub fn run_mc(model: &dyn MeeModel, dataset: &Dataset, cfg: &McConfig) -> Result<McRun, SamplingError> {
    let samples = sobol_samples(model, &cfg.ranges, &cfg.plan)?;
    let costs = mc_costs(model, dataset, &samples, &cfg.cost, cfg.jobs)?;
    let rmse = costs.rmse(&dataset.measured_costs(), None);
    let behavioural = behavioural_split(&rmse, cfg.behavioural)?;
    let indices = sensitivity_indices(&samples, &behavioural, cfg.reference)?;
    Ok(McRun {
        model: model.name().into(),
        plan: cfg.plan,
        samples,
        costs,
        rmse,
        behavioural,
        reference: cfg.reference,
        indices,
    })
}

/// Serializable digest of an [`McRun`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub model: String,
    pub n_samples: usize,
    pub behavioural: usize,
    pub seed: u64,
    pub skip: u64,
    pub reference: Reference,
    pub param_names: Vec<String>,
    pub ranges: Vec<ParamRange>,
    pub invalid_samples: usize,
    pub indices: Vec<SensitivityIndex>,
    /// Parameter names by decreasing index.
    pub ranking: Vec<String>,
    pub best: Vec<BestSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSample {
    pub sample: usize,
    pub rmse: f64,
    pub values: Vec<f64>,
}

impl McRun {
    pub fn summary(&self) -> McSummary {
        McSummary {
            model: self.model.clone(),
            n_samples: self.samples.n_samples(),
            behavioural: self.behavioural.len(),
            seed: self.plan.seed,
            skip: self.plan.skip,
            reference: self.reference,
            param_names: self.samples.names.clone(),
            ranges: self.samples.ranges.clone(),
            invalid_samples: self.rmse.iter().filter(|r| !r.is_finite()).count(),
            indices: self.indices.clone(),
            ranking: ranking(&self.indices).into_iter().map(|i| self.indices[i].name.clone()).collect(),
            best: self
                .behavioural
                .iter()
                .map(|&s| BestSample { sample: s, rmse: self.rmse[s], values: self.samples.rows[s].clone() })
                .collect(),
        }
    }

    /// The quasi-optimal parameter set over all trials.
    pub fn best(&self) -> &[f64] {
        &self.samples.rows[self.behavioural[0]]
    }
}
