//! Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KsError {
    #[error("KS test needs two non-empty samples")]
    EmptySample,
    #[error("KS sample contains NaN")]
    NaN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn sorted(x: &[f64]) -> Result<Vec<f64>, KsError> {
    if x.is_empty() {
        return Err(KsError::EmptySample);
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(KsError::NaN);
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// `sup |F_a - F_b|` over the pooled sample.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, KsError> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    Ok(statistic_sorted(&a, &b))
}

fn statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let sf = if lambda < 1.18 {
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda
            * (1..=7).map(|k| y.powi((2 * k - 1) * (2 * k - 1))).sum::<f64>();
        1.0 - cdf
    } else {
        let x = (-2.0 * lambda * lambda).exp();
        2.0 * (1..=50)
            .map(|j: i32| if j % 2 == 1 { 1.0 } else { -1.0 } * x.powi(j * j))
            .sum::<f64>()
    };
    sf.clamp(0.0, 1.0)
}

/// Asymptotic p-value for statistic `d` at effective sample size `n_eff`.
pub fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    kolmogorov_sf(n_eff.sqrt() * d)
}

/// Two-sample test of independent samples, `n_eff = n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, KsError> {
    let statistic = ks_statistic(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    Ok(KsResult { statistic, p_value: ks_p_value(statistic, na * nb / (na + nb)) })
}
