//! Minetti and Alexander's empirical rate: activation times maximal power
//! times a rational function of relative shortening velocity.

use super::{ChannelSpace, MeeModel, ModelError, PreparedTrial, RateCurve};
use crate::data::{GaitTrial, MuscleParams, MuscleState};

pub const PARAM_NAMES: [&str; 7] = ["p_mi1", "p_mi2", "p_mi3", "p_mi4", "p_mi5", "p_mi6", "p_mi7"];
pub const ORIGINAL: [f64; 7] = [0.054, 0.506, 2.46, 1.0, -1.13, 12.8, -1.64];

/// Denominators smaller than this in magnitude are treated as poles.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// `(p1 + p2 v + p3 v^2) / (p4 + p5 v + p6 v^2 + p7 v^3)`.
pub fn phi(vbar: f64, p: &[f64]) -> Result<f64, ModelError> {
    let num = p[0] + vbar * (p[1] + vbar * p[2]);
    let den = p[3] + vbar * (p[4] + vbar * (p[5] + vbar * p[6]));
    if den.abs() < POLE_TOLERANCE {
        return Err(ModelError::Pole { vbar, denominator: den });
    }
    Ok(num / den)
}

/// Rate in W; `v_max = v_max_norm * l_ce_opt` in m/s.
pub fn mine97_rate(state: &MuscleState, mp: &MuscleParams, p: &[f64]) -> Result<f64, ModelError> {
    let vbar = state.vce_norm / mp.v_max_norm;
    let v_max = mp.v_max_norm * mp.l_ce_opt;
    Ok(state.act * v_max * mp.f_max * phi(vbar, p)?)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Mine97;

impl MeeModel for Mine97 {
    fn name(&self) -> &'static str {
        "MINE97"
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

    fn prepare<'t>(&self, trial: &'t GaitTrial) -> Box<dyn PreparedTrial + 't> {
        let n = trial.muscles.len() * trial.grid;
        let mut scale = Vec::with_capacity(n);
        let mut vbar = Vec::with_capacity(n);
        for m in &trial.muscles {
            let v_max = m.params.v_max_norm * m.params.l_ce_opt;
            for k in 0..trial.grid {
                scale.push(m.act[k] * v_max * m.params.f_max);
                vbar.push(m.vce[k] / m.params.v_max_norm);
            }
        }
        Box::new(PreparedMine97 { trial, scale, vbar })
    }
}

struct PreparedMine97<'t> {
    trial: &'t GaitTrial,
    scale: Vec<f64>,
    vbar: Vec<f64>,
}

impl PreparedTrial for PreparedMine97<'_> {
    fn trial(&self) -> &GaitTrial {
        self.trial
    }

    fn channels(&self) -> usize {
        self.trial.muscles.len()
    }

    fn rates_into(&self, params: &[f64], out: &mut RateCurve) -> Result<(), ModelError> {
        out.reshape(self.channels(), self.trial.grid);
        for ((o, &s), &v) in out.data.iter_mut().zip(&self.scale).zip(&self.vbar) {
            *o = s * phi(v, params)?;
        }
        Ok(())
    }
}
