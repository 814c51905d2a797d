//! Margaria's efficiency model: fibre power divided by a shortening or a
//! lengthening efficiency.

use super::{ChannelSpace, MeeModel, ModelError, ParamRange, PreparedTrial, RateCurve};
use crate::data::{GaitTrial, MuscleParams, MuscleState};
use crate::hill::{ce_power, HillConfig, DEFAULT_CURVATURE};

pub const PARAM_NAMES: [&str; 2] = ["eta_s", "eta_l"];
pub const ORIGINAL: [f64; 2] = [0.25, 1.2];

/// Rate from fibre power. Shortening (`vce > 0`) divides by `eta_s`,
/// lengthening returns `-w / eta_l`, isometric gives 0.
pub fn power_rate(w_dot: f64, vce_norm: f64, eta_s: f64, eta_l: f64) -> f64 {
    if vce_norm > 0.0 {
        w_dot / eta_s
    } else if vce_norm < 0.0 {
        -w_dot / eta_l
    } else {
        0.0
    }
}

pub fn marg68_rate(state: &MuscleState, mp: &MuscleParams, hc: &HillConfig, eta_s: f64, eta_l: f64) -> f64 {
    let w = ce_power(state.act, state.lce_norm, state.vce_norm, mp, hc);
    power_rate(w, state.vce_norm, eta_s, eta_l)
}

#[derive(Debug, Clone, Copy)]
pub struct Marg68 {
    /// Force-velocity curvature used for fibre force.
    pub curvature: f64,
}

impl Default for Marg68 {
    fn default() -> Self {
        Marg68 { curvature: DEFAULT_CURVATURE }
    }
}

impl MeeModel for Marg68 {
    fn name(&self) -> &'static str {
        "MARG68"
    }

    fn space(&self) -> ChannelSpace {
        ChannelSpace::Muscle
    }

    fn param_names(&self) -> &'static [&'static str] {
        &PARAM_NAMES
    }

    fn original_params(&self) -> &'static [f64] {
        &ORIGINAL
    }

    fn default_ranges(&self) -> Vec<ParamRange> {
        vec![ParamRange::new(-5.0, 5.0); 2]
    }

    fn prepare<'t>(&self, trial: &'t GaitTrial) -> Box<dyn PreparedTrial + 't> {
        // Power and velocity sign do not depend on the efficiencies.
        let mut power = Vec::with_capacity(trial.muscles.len() * trial.grid);
        let mut vce = Vec::with_capacity(trial.muscles.len() * trial.grid);
        for m in &trial.muscles {
            let hc = HillConfig::for_muscle(&m.params, self.curvature);
            for k in 0..trial.grid {
                let s = m.state(k);
                power.push(ce_power(s.act, s.lce_norm, s.vce_norm, &m.params, &hc));
                vce.push(s.vce_norm);
            }
        }
        Box::new(PreparedMarg68 { trial, power, vce })
    }
}

struct PreparedMarg68<'t> {
    trial: &'t GaitTrial,
    power: Vec<f64>,
    vce: Vec<f64>,
}

impl PreparedTrial for PreparedMarg68<'_> {
    fn trial(&self) -> &GaitTrial {
        self.trial
    }

    fn channels(&self) -> usize {
        self.trial.muscles.len()
    }

    fn rates_into(&self, params: &[f64], out: &mut RateCurve) -> Result<(), ModelError> {
        let (eta_s, eta_l) = (params[0], params[1]);
        out.reshape(self.channels(), self.trial.grid);
        for ((o, &w), &v) in out.data.iter_mut().zip(&self.power).zip(&self.vce) {
            *o = power_rate(w, v, eta_s, eta_l);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn branch_arithmetic() {
        assert_eq!(power_rate(10.0, 1.0, 0.25, 1.2), 40.0);
        assert!((power_rate(-10.0, -1.0, 0.25, 1.2) - 8.333333333333334).abs() < 1e-9);
        assert!((power_rate(-10.0, -1.0, 0.25, -2.28) - (-4.385964912280701)).abs() < 1e-9);
        assert_eq!(power_rate(0.0, 0.0, 0.25, 1.2), 0.0);
    }

    fn mp() -> MuscleParams {
        MuscleParams { f_max: 1000.0, l_ce_opt: 0.1, width: 0.56, r_ft: 0.5, v_max_norm: 10.0 }
    }

    #[test]
    fn isometric_state_costs_nothing() {
        let s = MuscleState { act: 0.7, stim: 0.7, lce_norm: 1.1, vce_norm: 0.0, tstim: 0.0 };
        let hc = HillConfig::for_muscle(&mp(), 4.0);
        assert_eq!(marg68_rate(&s, &mp(), &hc, 0.25, 1.2), 0.0);
    }

    #[test]
    fn shortening_power_matches_hand_computation() {
        // a=1, l=1, v=2.5 (vbar=0.25): F = 1000 * 0.375, w = F * 2.5 * 0.1 = 93.75 W
        let s = MuscleState { act: 1.0, stim: 1.0, lce_norm: 1.0, vce_norm: 2.5, tstim: 0.0 };
        let hc = HillConfig::for_muscle(&mp(), 4.0);
        assert!((marg68_rate(&s, &mp(), &hc, 0.25, 1.2) - 375.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn shortening_sign_rule(a in 0.01f64..1.0, l in 0.5f64..1.5, v in 0.01f64..9.0, eta in -5.0f64..5.0) {
            prop_assume!(eta.abs() > 1e-3);
            let s = MuscleState { act: a, stim: a, lce_norm: l, vce_norm: v, tstim: 0.0 };
            let hc = HillConfig::for_muscle(&mp(), 4.0);
            let w = ce_power(a, l, v, &mp(), &hc);
            let e = marg68_rate(&s, &mp(), &hc, eta, 1.2);
            prop_assert_eq!(e.signum(), w.signum() * eta.signum());
        }
    }
}
