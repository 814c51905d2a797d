//! Calculated-versus-measured cost metrics and waveform similarity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("metric needs at least one pair")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("repeated-measures correlation needs >= 2 subjects with >= 2 trials each")]
    TooFewRepeats,
    #[error("undefined result: {0}")]
    Degenerate(&'static str),
    #[error("waveform set needs >= 2 waveforms of >= 2 common frames")]
    Shape,
}

/// Per-trial calculated and measured costs with their subject.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PairedCosts {
    pub subjects: Vec<String>,
    pub calculated: Vec<f64>,
    pub measured: Vec<f64>,
}

impl PairedCosts {
    pub fn new(subjects: Vec<String>, calculated: Vec<f64>, measured: Vec<f64>) -> Result<Self, MetricError> {
        if calculated.len() != measured.len() {
            return Err(MetricError::Length(calculated.len(), measured.len()));
        }
        if subjects.len() != measured.len() {
            return Err(MetricError::Length(subjects.len(), measured.len()));
        }
        Ok(PairedCosts { subjects, calculated, measured })
    }

    pub fn len(&self) -> usize {
        self.measured.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measured.is_empty()
    }

    pub fn push(&mut self, subject: &str, calculated: f64, measured: f64) {
        self.subjects.push(subject.to_string());
        self.calculated.push(calculated);
        self.measured.push(measured);
    }
}

/// Unchecked RMSE of two equal-length slices. Empty input gives NaN.
pub fn rmse_slices(calc: &[f64], meas: &[f64]) -> f64 {
    let ss: f64 = calc.iter().zip(meas).map(|(c, m)| (c - m) * (c - m)).sum();
    (ss / calc.len() as f64).sqrt()
}

pub fn rmse(pc: &PairedCosts) -> Result<f64, MetricError> {
    if pc.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(rmse_slices(&pc.calculated, &pc.measured))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rmcorr {
    pub r: f64,
    pub p_value: f64,
    pub df: usize,
}

/// Repeated-measures correlation: per-subject mean centering, then a pooled
/// Pearson correlation with `df = N - k - 1`.
pub fn rmcorr(pc: &PairedCosts) -> Result<Rmcorr, MetricError> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in pc.subjects.iter().enumerate() {
        groups.entry(s.as_str()).or_default().push(i);
    }
    if groups.len() < 2 || groups.values().any(|g| g.len() < 2) {
        return Err(MetricError::TooFewRepeats);
    }
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for idx in groups.values() {
        let n = idx.len() as f64;
        let mx = idx.iter().map(|&i| pc.calculated[i]).sum::<f64>() / n;
        let my = idx.iter().map(|&i| pc.measured[i]).sum::<f64>() / n;
        for &i in idx {
            let (dx, dy) = (pc.calculated[i] - mx, pc.measured[i] - my);
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(MetricError::Degenerate("no within-subject variance"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = pc.len() - groups.len() - 1;
    let p_value = if df == 0 {
        1.0
    } else if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df as f64 / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|_| MetricError::Degenerate("t distribution"))?;
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(Rmcorr { r, p_value, df })
}

/// `G` waveforms sampled on `F` common frames, stored waveform-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSet {
    pub waveforms: usize,
    pub frames: usize,
    pub data: Vec<f64>,
}

impl WaveformSet {
    pub fn new(rows: &[&[f64]]) -> Result<Self, MetricError> {
        let frames = rows.first().map_or(0, |r| r.len());
        if rows.len() < 2 || frames < 2 || rows.iter().any(|r| r.len() != frames) {
            return Err(MetricError::Shape);
        }
        Ok(WaveformSet { waveforms: rows.len(), frames, data: rows.concat() })
    }

    fn at(&self, g: usize, f: usize) -> f64 {
        self.data[g * self.frames + f]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cmc {
    pub value: f64,
    /// The radicand was negative and the value was set to 0.
    pub clamped: bool,
}

/// Between-waveform coefficient of multiple correlation.
///
/// `CMC = sqrt(1 - [sum (y_gf - mean_f)^2 / (F (G-1))] / [sum (y_gf - mean)^2 / (G F - 1)])`
pub fn cmc(ws: &WaveformSet) -> Result<Cmc, MetricError> {
    let (g, f) = (ws.waveforms, ws.frames);
    if g < 2 || f < 2 || ws.data.len() != g * f {
        return Err(MetricError::Shape);
    }
    let grand = ws.data.iter().sum::<f64>() / (g * f) as f64;
    let mut within = 0.0;
    for fr in 0..f {
        let mean_f = (0..g).map(|w| ws.at(w, fr)).sum::<f64>() / g as f64;
        within += (0..g).map(|w| (ws.at(w, fr) - mean_f).powi(2)).sum::<f64>();
    }
    let total: f64 = ws.data.iter().map(|y| (y - grand).powi(2)).sum();
    if !(total > 0.0) {
        return Err(MetricError::Degenerate("zero total variance"));
    }
    let ratio = (within / (f * (g - 1)) as f64) / (total / (g * f - 1) as f64);
    let radicand = 1.0 - ratio;
    if radicand < 0.0 {
        Ok(Cmc { value: 0.0, clamped: true })
    } else {
        Ok(Cmc { value: radicand.sqrt().min(1.0), clamped: false })
    }
}

/// Mean CMC over several waveform sets (e.g. one per channel and trial).
/// Sets with zero total variance are skipped; `None` if none remain.
pub fn mean_cmc<'a>(sets: impl IntoIterator<Item = &'a WaveformSet>) -> Option<f64> {
    let vals: Vec<f64> = sets.into_iter().filter_map(|w| cmc(w).ok()).map(|c| c.value).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pc(subjects: &[&str], calc: &[f64], meas: &[f64]) -> PairedCosts {
        PairedCosts::new(subjects.iter().map(|s| s.to_string()).collect(), calc.to_vec(), meas.to_vec()).unwrap()
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&pc(&["a", "a"], &[1.0, 2.0], &[1.0, 2.0])).unwrap(), 0.0);
        assert_eq!(rmse(&pc(&["a", "a"], &[1.0, 0.0], &[0.0, 1.0])).unwrap(), 1.0);
        assert!((rmse(&pc(&["a", "a"], &[3.0, 4.0], &[0.0, 0.0])).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(rmse(&PairedCosts::default()).unwrap_err(), MetricError::Empty);
    }

    #[test]
    fn rmcorr_perfect_fits() {
        let s = ["a", "a", "a", "b", "b", "b"];
        let x = [1.0, 2.0, 3.0, 5.0, 6.0, 7.0];
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 2.0 * v + if i < 3 { 0.0 } else { -9.0 }).collect();
        let r = rmcorr(&pc(&s, &x, &y)).unwrap();
        assert!((r.r - 1.0).abs() < 1e-12);
        assert_eq!(r.df, 3);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((rmcorr(&pc(&s, &x, &neg)).unwrap().r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rmcorr_needs_repeats() {
        assert_eq!(rmcorr(&pc(&["a", "a"], &[1.0, 2.0], &[1.0, 3.0])).unwrap_err(), MetricError::TooFewRepeats);
        assert_eq!(
            rmcorr(&pc(&["a", "a", "b"], &[1.0, 2.0, 3.0], &[1.0, 3.0, 4.0])).unwrap_err(),
            MetricError::TooFewRepeats
        );
        assert!(matches!(
            rmcorr(&pc(&["a", "a", "b", "b"], &[1.0, 1.0, 2.0, 2.0], &[1.0, 3.0, 4.0, 5.0])),
            Err(MetricError::Degenerate(_))
        ));
    }

    #[test]
    fn rmcorr_reference_value() {
        let s: Vec<&str> = (0..15).map(|i| if i < 8 { "a" } else { "b" }).collect();
        let x = [1.2, 2.3, 0.7, 3.1, 2.2, 1.9, 2.8, 0.4, 5.1, 4.4, 6.0, 5.5, 4.9, 6.3, 5.2];
        let y = [2.0, 2.9, 1.9, 3.3, 2.1, 2.8, 3.6, 1.2, 7.7, 7.1, 7.4, 8.3, 6.9, 8.0, 7.0];
        let r = rmcorr(&pc(&s, &x, &y)).unwrap();
        assert_eq!(r.df, 12);
        assert!((r.r - 0.8178906253494709).abs() < 1e-12);
        assert!((r.p_value - 0.0003513082108443603).abs() < 1e-9);
    }

    #[test]
    fn cmc_examples() {
        let a = [0.0, 1.0, 4.0, 2.0];
        let ws = WaveformSet::new(&[&a, &a, &a]).unwrap();
        assert_eq!(cmc(&ws).unwrap(), Cmc { value: 1.0, clamped: false });
        // anti-phase waveforms: within-frame variance dominates
        let b = [1.0, -1.0, 1.0, -1.0];
        let c = [-1.0, 1.0, -1.0, 1.0];
        let r = cmc(&WaveformSet::new(&[&b, &c]).unwrap()).unwrap();
        assert_eq!(r, Cmc { value: 0.0, clamped: true });
        let z = [2.0; 4];
        assert!(matches!(cmc(&WaveformSet::new(&[&z, &z]).unwrap()), Err(MetricError::Degenerate(_))));
        assert_eq!(WaveformSet::new(&[&a]).unwrap_err(), MetricError::Shape);
    }

    #[test]
    fn cmc_hand_value() {
        // y1 = [0, 2], y2 = [1, 3]: within = 4 * 0.25 = 1, F(G-1) = 2;
        // total = 2.25 + 0.25 + 0.25 + 2.25 = 5, GF-1 = 3; ratio 0.3
        let r = cmc(&WaveformSet::new(&[&[0.0, 2.0], &[1.0, 3.0]]).unwrap()).unwrap();
        assert!((r.value - 0.7f64.sqrt()).abs() < 1e-12);
    }
}
