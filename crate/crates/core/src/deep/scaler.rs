use serde::{Deserialize, Serialize};

use super::features::TrialInputs;

/// Per-feature min-max scaling fitted on training inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    /// Fits on all rows of `inputs`. All inputs must share a feature count.
    pub fn fit<'a>(inputs: impl IntoIterator<Item = &'a TrialInputs>) -> Self {
        let mut min: Vec<f64> = Vec::new();
        let mut max: Vec<f64> = Vec::new();
        for x in inputs {
            if min.is_empty() {
                min = vec![f64::INFINITY; x.n_features];
                max = vec![f64::NEG_INFINITY; x.n_features];
            }
            for r in 0..x.rows() {
                for (j, &v) in x.row(r).iter().enumerate() {
                    min[j] = min[j].min(v);
                    max[j] = max[j].max(v);
                }
            }
        }
        Scaler { min, max }
    }

    /// Constant features map to 0.
    fn span(&self, j: usize) -> f64 {
        let s = self.max[j] - self.min[j];
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// No clipping: values outside the fitted range leave [0, 1].
    pub fn transform(&self, x: &TrialInputs) -> TrialInputs {
        let mut out = x.clone();
        let n = self.min.len();
        for (i, v) in out.data.iter_mut().enumerate() {
            let j = i % n;
            *v = (*v - self.min[j]) / self.span(j);
        }
        out
    }

    pub fn inverse(&self, x: &TrialInputs) -> TrialInputs {
        let mut out = x.clone();
        let n = self.min.len();
        for (i, v) in out.data.iter_mut().enumerate() {
            let j = i % n;
            *v = *v * self.span(j) + self.min[j];
        }
        out
    }
}
