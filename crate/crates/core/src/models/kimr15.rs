//! Kim and Roberts' joint-space model.
//!
//! Rate per joint: `h_M |qdot|_max |M| + h_SL |M qdot| + qdot_cc (M qdot)_max + M qdot`,
//! with the shortening coefficient when `M qdot >= 0` and the lengthening
//! one otherwise. Maxima are taken per joint over the trial's gait cycle.

use serde::{Deserialize, Serialize};

use super::{ChannelSpace, MeeModel, ModelError, PreparedTrial, RateCurve};
use crate::data::{GaitTrial, JointSeries, JointState};

pub const PARAM_NAMES: [&str; 4] = ["h_M", "h_SL_s", "h_SL_l", "qdot_cc"];
pub const ORIGINAL: [f64; 4] = [0.054, 0.283, 1.423, 0.004];

/// Per-joint maxima over one trial.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointMaxima {
    /// max |qdot|, rad/s.
    pub qdot_abs: f64,
    /// max of the signed joint power M qdot, W.
    pub power: f64,
}

pub fn joint_maxima(j: &JointSeries) -> JointMaxima {
    JointMaxima {
        qdot_abs: j.qdot.iter().fold(0.0, |acc: f64, q| acc.max(q.abs())),
        power: j
            .moment
            .iter()
            .zip(&j.qdot)
            .map(|(m, q)| m * q)
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Maxima for every joint of the trial, in joint order.
pub fn trial_maxima(trial: &GaitTrial) -> Vec<JointMaxima> {
    trial.joints.iter().map(joint_maxima).collect()
}

pub fn kimr15_rate(js: &JointState, mx: &JointMaxima, p: &[f64]) -> f64 {
    let power = js.moment * js.qdot;
    let h_sl = if power >= 0.0 { p[1] } else { p[2] };
    p[0] * mx.qdot_abs * js.moment.abs() + h_sl * power.abs() + p[3] * mx.power + power
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Kimr15;

impl MeeModel for Kimr15 {
    fn name(&self) -> &'static str {
        "KIMR15"
    }

    fn space(&self) -> ChannelSpace {
        ChannelSpace::Joint
    }

    fn param_names(&self) -> &'static [&'static str] {
        &PARAM_NAMES
    }

    fn original_params(&self) -> &'static [f64] {
        &ORIGINAL
    }

    fn prepare<'t>(&self, trial: &'t GaitTrial) -> Box<dyn PreparedTrial + 't> {
        Box::new(PreparedKimr15 { trial, maxima: trial_maxima(trial) })
    }
}

struct PreparedKimr15<'t> {
    trial: &'t GaitTrial,
    maxima: Vec<JointMaxima>,
}

impl PreparedTrial for PreparedKimr15<'_> {
    fn trial(&self) -> &GaitTrial {
        self.trial
    }

    fn channels(&self) -> usize {
        self.trial.joints.len()
    }

    fn rates_into(&self, params: &[f64], out: &mut RateCurve) -> Result<(), ModelError> {
        out.reshape(self.channels(), self.trial.grid);
        for (c, (j, mx)) in self.trial.joints.iter().zip(&self.maxima).enumerate() {
            for (k, o) in out.channel_mut(c).iter_mut().enumerate() {
                *o = kimr15_rate(&j.state(k), mx, params);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn joint(qdot: Vec<f64>, moment: Vec<f64>) -> JointSeries {
        let n = qdot.len();
        JointSeries { name: "knee".into(), q: vec![0.0; n], qdot, qddot: vec![0.0; n], moment }
    }

    #[test]
    fn maxima_examples() {
        let mx = joint_maxima(&joint(vec![0.0; 10], vec![1.0; 10]));
        assert_eq!(mx.qdot_abs, 0.0);
        let mx = joint_maxima(&joint(vec![2.0; 10], vec![3.0; 10]));
        assert_eq!((mx.qdot_abs, mx.power), (2.0, 6.0));
        let qdot: Vec<f64> = (0..100).map(|k| (std::f64::consts::TAU * k as f64 / 100.0).sin()).collect();
        let brute = qdot.iter().cloned().fold(f64::MIN, f64::max);
        let mx = joint_maxima(&joint(qdot, vec![1.0; 100]));
        assert_eq!(mx.power, brute);
    }

    #[test]
    fn rate_examples() {
        let zero = JointState::default();
        assert_eq!(kimr15_rate(&zero, &JointMaxima::default(), &ORIGINAL), 0.0);

        let mx = JointMaxima { qdot_abs: 1.0, power: 10.0 };
        let conc = JointState { q: 0.0, qdot: 1.0, qddot: 0.0, moment: 10.0 };
        assert!((kimr15_rate(&conc, &mx, &ORIGINAL) - 13.41).abs() < 1e-9);
        let ecc = JointState { qdot: -1.0, ..conc };
        assert!((kimr15_rate(&ecc, &mx, &ORIGINAL) - 4.81).abs() < 1e-9);
    }

    #[test]
    fn terms_match_independent_recomputation() {
        let mx = JointMaxima { qdot_abs: 3.2, power: 41.0 };
        let p = [0.1, 0.2, 0.3, 0.4];
        for (q, m) in [(1.5, -20.0), (-0.7, -5.0), (2.0, 8.0), (0.0, 12.0)] {
            let js = JointState { q: 0.0, qdot: q, qddot: 0.0, moment: m };
            let maint = 0.1 * 3.2 * m.abs();
            let sl = if m * q >= 0.0 { 0.2 } else { 0.3 } * (m * q).abs();
            let cc = 0.4 * 41.0;
            let work = m * q;
            assert!((kimr15_rate(&js, &mx, &p) - (maint + sl + cc + work)).abs() < 1e-12);
        }
    }
}
