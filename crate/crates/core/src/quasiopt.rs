//! Subject-wise leave-one-out selection of quasi-optimal parameter sets.
//!
//! All folds share one sample matrix and its cost matrix. A fold picks the
//! sample with the lowest RMSE on its training trials and predicts the
//! held-out subject with it; held-out predictions of all folds are pooled
//! before scoring.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{trial_cost, CostOptions};
use crate::data::Dataset;
use crate::metrics::{rmcorr, rmse, MetricError, PairedCosts, Rmcorr};
use crate::models::{MeeModel, ModelError, ModelParamSet};
use crate::parallel::with_jobs;
use crate::sensitivity::{CostMatrix, SampleMatrix};

#[derive(Debug, Error)]
pub enum QuasiOptError {
    #[error("leave-one-out needs >= 2 subjects, found {0}")]
    TooFewSubjects(usize),
    #[error("no finite-RMSE sample for the fold holding out {0}")]
    NoValidSample(String),
    #[error("cost matrix has {got} trials, dataset has {expected}")]
    Shape { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// RMSE and repeated-measures correlation of one set of predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub rmse: f64,
    /// `None` when the correlation is undefined (e.g. no within-subject variance).
    pub rmc: Option<Rmcorr>,
}

impl Score {
    pub fn of(pc: &PairedCosts) -> Result<Self, MetricError> {
        Ok(Score { rmse: rmse(pc)?, rmc: rmcorr(pc).ok() })
    }
}

/// Score of fixed parameters on every trial of `dataset`.
pub fn score_params(
    model: &dyn MeeModel,
    dataset: &Dataset,
    params: &[f64],
    opts: &CostOptions,
) -> Result<(PairedCosts, Score), QuasiOptError> {
    let mut pc = PairedCosts::default();
    for t in &dataset.trials {
        pc.push(&t.subject.id, trial_cost(model, t, params, opts)?, t.measured_cost);
    }
    let score = Score::of(&pc)?;
    Ok((pc, score))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub held_out: String,
    pub sample: usize,
    pub params: ModelParamSet,
    pub train_rmse: f64,
    pub test_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub model: String,
    pub folds: Vec<Fold>,
    /// Held-out predictions of all folds, in fold order.
    pub pooled: PairedCosts,
    pub score: Score,
}

/// Argmin over finite values; ties go to the lower index.
fn argmin(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in v.iter().enumerate() {
        if x.is_finite() && best.map_or(true, |b| x < v[b]) {
            best = Some(i);
        }
    }
    best
}

pub fn loo_quasi_opt(
    model: &dyn MeeModel,
    dataset: &Dataset,
    samples: &SampleMatrix,
    costs: &CostMatrix,
    jobs: usize,
) -> Result<LooReport, QuasiOptError> {
    if costs.n_trials != dataset.trials.len() {
        return Err(QuasiOptError::Shape { expected: dataset.trials.len(), got: costs.n_trials });
    }
    let groups = dataset.trials_by_subject();
    if groups.len() < 2 {
        return Err(QuasiOptError::TooFewSubjects(groups.len()));
    }
    let measured = dataset.measured_costs();
    let folds: Vec<Result<Fold, QuasiOptError>> = with_jobs(jobs, || {
        groups
            .par_iter()
            .map(|(subject, test)| {
                let train: Vec<usize> = (0..dataset.trials.len()).filter(|i| !test.contains(i)).collect();
                let train_rmse = costs.rmse(&measured, Some(&train));
                let sample = argmin(&train_rmse).ok_or_else(|| QuasiOptError::NoValidSample(subject.clone()))?;
                let test_rmse = costs.rmse(&measured, Some(test))[sample];
                Ok(Fold {
                    held_out: subject.clone(),
                    sample,
                    params: ModelParamSet::with_values(model, samples.rows[sample].clone()),
                    train_rmse: train_rmse[sample],
                    test_rmse,
                })
            })
            .collect()
    });
    let folds: Vec<Fold> = folds.into_iter().collect::<Result<_, _>>()?;
    let mut pooled = PairedCosts::default();
    for (fold, (_, test)) in folds.iter().zip(&groups) {
        let row = costs.row(fold.sample);
        for &i in test {
            pooled.push(&fold.held_out, row[i], measured[i]);
        }
    }
    let score = Score::of(&pooled)?;
    Ok(LooReport { model: model.name().into(), folds, pooled, score })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub per_model: Vec<(String, f64)>,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single model.
    pub sd: f64,
}

/// Percentage RMSE reduction from `original` to `quasi`, matched by model
/// name in the order of `original`. Models missing from `quasi`, or with a
/// zero original RMSE, are skipped.
pub fn improvement_summary(original: &[(String, f64)], quasi: &[(String, f64)]) -> Improvement {
    let per_model: Vec<(String, f64)> = original
        .iter()
        .filter(|(_, o)| *o > 0.0)
        .filter_map(|(name, o)| {
            quasi.iter().find(|(n, _)| n == name).map(|(_, q)| (name.clone(), 100.0 * (o - q) / o))
        })
        .collect();
    let n = per_model.len() as f64;
    let mean = if per_model.is_empty() { 0.0 } else { per_model.iter().map(|p| p.1).sum::<f64>() / n };
    let sd = if per_model.len() < 2 {
        0.0
    } else {
        (per_model.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Improvement { per_model, mean, sd }
}

/// One line of the original-versus-quasi-optimized table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub model: String,
    pub original: Option<Score>,
    pub quasi: Option<Score>,
}

pub fn format_table(rows: &[TableRow]) -> String {
    fn cell(s: &Option<Score>) -> (String, String) {
        match s {
            Some(s) => (
                s.rmc.map_or("-".into(), |r| format!("{:.2}", r.r)),
                format!("{:.2}", s.rmse),
            ),
            None => ("-".into(), "-".into()),
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{:<8} | {:>9} {:>10} | {:>9} {:>10}", "", "Original", "", "Quasi-opt", "");
    let _ = writeln!(out, "{:<8} | {:>9} {:>10} | {:>9} {:>10}", "Model", "RMC", "RMSE", "RMC", "RMSE");
    for r in rows {
        let (orc, ors) = cell(&r.original);
        let (qrc, qrs) = cell(&r.quasi);
        let _ = writeln!(out, "{:<8} | {:>9} {:>10} | {:>9} {:>10}", r.model, orc, ors, qrc, qrs);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_prefers_lower_index_and_skips_non_finite() {
        assert_eq!(argmin(&[f64::INFINITY, 2.0, 1.0, 1.0]), Some(2));
        assert_eq!(argmin(&[f64::NAN, f64::INFINITY]), None);
    }

    #[test]
    fn improvement_examples() {
        let o = vec![("MARG68".to_string(), 1.19)];
        let imp = improvement_summary(&o, &[("MARG68".to_string(), 0.79)]);
        assert!((imp.per_model[0].1 - 33.613445378151).abs() < 1e-9);
        assert_eq!(improvement_summary(&o, &o).mean, 0.0);
    }

    #[test]
    fn improvement_over_four_models() {
        let names = ["MARG68", "MINE97", "LICH05", "KIMR15"];
        let o: Vec<(String, f64)> = names.iter().zip([1.19, 1.00, 1.06, 1.98]).map(|(n, v)| (n.to_string(), v)).collect();
        let q: Vec<(String, f64)> = names.iter().zip([0.79, 0.73, 0.68, 1.15]).map(|(n, v)| (n.to_string(), v)).collect();
        let imp = improvement_summary(&o, &q);
        let expect = [40.0 / 1.19, 27.0, 38.0 / 1.06, 83.0 / 1.98];
        let mean = expect.iter().sum::<f64>() / 4.0;
        assert!((imp.mean - mean).abs() < 1e-9);
        assert!((31.0..=57.0).contains(&imp.mean));
    }

    #[test]
    fn exact_original_is_skipped() {
        let o = vec![("A".to_string(), 0.0), ("B".to_string(), 2.0)];
        let q = vec![("A".to_string(), 0.1), ("B".to_string(), 1.0)];
        let imp = improvement_summary(&o, &q);
        assert_eq!(imp.per_model, vec![("B".to_string(), 50.0)]);
        assert!(imp.mean.is_finite());
    }

    #[test]
    fn table_layout() {
        let t = format_table(&[TableRow {
            model: "MARG68".into(),
            original: Some(Score { rmse: 1.19, rmc: None }),
            quasi: None,
        }]);
        assert!(t.lines().nth(2).unwrap().starts_with("MARG68"));
        assert!(t.contains("1.19"));
    }
}
