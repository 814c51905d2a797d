//! Lichtwark and Wilson's model (modified form): fibre power plus
//! maintenance and shortening/lengthening heat.
//!
//! Parameter vector layout: `[G, t_act, p1, ..., p8]`. `G` doubles as the
//! force-velocity curvature, `t_act` is the activation threshold used to
//! measure stimulation duration.

use super::{ChannelSpace, MeeModel, ModelError, PreparedTrial, RateCurve};
use crate::data::{GaitTrial, MuscleParams, MuscleState};
use crate::hill::HillConfig;

pub const PARAM_NAMES: [&str; 10] = ["G", "t_act", "p_l1", "p_l2", "p_l3", "p_l4", "p_l5", "p_l6", "p_l7", "p_l8"];
pub const ORIGINAL: [f64; 10] = [4.0, 0.1, 0.3, 0.3, 7.0, 0.8, 0.72, 0.175, 0.022, 0.5];

/// Parameters unpacked from the flat vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lich05Params {
    pub g: f64,
    pub t_act: f64,
    pub p: [f64; 8],
}

impl Lich05Params {
    pub fn from_slice(v: &[f64]) -> Self {
        let mut p = [0.0; 8];
        p.copy_from_slice(&v[2..10]);
        Lich05Params { g: v[0], t_act: v[1], p }
    }
}

/// Run length (s) of the current stretch with activation above `t_act`,
/// ending at each sample.
pub fn lich05_tstim(act: &[f64], t_act: f64, dt: f64) -> Vec<f64> {
    let mut run = 0usize;
    act.iter()
        .map(|&a| {
            run = if a > t_act { run + 1 } else { 0 };
            run as f64 * dt
        })
        .collect()
}

/// Activation decay `p4 exp(-p5 t) + p6 exp(-p7 t)`.
pub fn gamma(tstim: f64, p: &[f64; 8]) -> f64 {
    p[3] * (-p[4] * tstim).exp() + p[5] * (-p[6] * tstim).exp()
}

/// Maintenance heat rate (per unit force and optimal length).
pub fn maintenance_heat(vce_norm: f64, tstim: f64, fv: f64, vmax_norm: f64, g: f64, p: &[f64; 8]) -> f64 {
    let base = gamma(tstim, p) * vmax_norm / (g * g);
    if vce_norm > 0.0 {
        base
    } else {
        base * (p[1] + (1.0 - p[1]) * (-p[2] * vce_norm * (fv - 1.0)).exp())
    }
}

/// Shortening/lengthening heat rate (per unit force and optimal length).
pub fn shortening_heat(vce_norm: f64, fv: f64, g: f64, p: &[f64; 8]) -> f64 {
    if vce_norm > 0.0 {
        vce_norm / g
    } else {
        -p[7] * fv * vce_norm
    }
}

/// Total rate `w + h`, W. With `length_scaling`, the heat term is multiplied
/// by the optimal fibre length so that it carries watts.
pub fn lich05_rate(state: &MuscleState, mp: &MuscleParams, params: &Lich05Params, length_scaling: bool) -> f64 {
    let hc = HillConfig::for_muscle(mp, params.g);
    lich05_rate_with(state, mp, &hc, hc.f_fl(state.lce_norm), params, length_scaling)
}

fn lich05_rate_with(
    state: &MuscleState,
    mp: &MuscleParams,
    hc: &HillConfig,
    fl: f64,
    params: &Lich05Params,
    length_scaling: bool,
) -> f64 {
    let p = &params.p;
    let v = state.vce_norm;
    let fv = hc.f_fv(v);
    let w = mp.f_max * state.act * fl * fv * v * mp.l_ce_opt;
    let h_m = maintenance_heat(v, state.tstim, fv, hc.vmax_norm, params.g, p);
    let h_sl = shortening_heat(v, fv, params.g, p);
    let mut h = state.act * mp.f_max * (p[0] * h_m + fl * ((1.0 - p[0]) * h_m + h_sl));
    if length_scaling {
        h *= mp.l_ce_opt;
    }
    w + h
}

#[derive(Debug, Clone, Copy)]
pub struct Lich05 {
    /// Scale heat terms by optimal fibre length (on by default).
    pub length_scaling: bool,
}

impl Default for Lich05 {
    fn default() -> Self {
        Lich05 { length_scaling: true }
    }
}

impl MeeModel for Lich05 {
    fn name(&self) -> &'static str {
        "LICH05"
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
        let fl = trial
            .muscles
            .iter()
            .flat_map(|m| m.lce.iter().map(|&l| crate::hill::f_fl(l, m.params.width)))
            .collect();
        Box::new(PreparedLich05 { trial, fl, length_scaling: self.length_scaling })
    }
}

struct PreparedLich05<'t> {
    trial: &'t GaitTrial,
    fl: Vec<f64>,
    length_scaling: bool,
}

impl PreparedTrial for PreparedLich05<'_> {
    fn trial(&self) -> &GaitTrial {
        self.trial
    }

    fn channels(&self) -> usize {
        self.trial.muscles.len()
    }

    fn rates_into(&self, params: &[f64], out: &mut RateCurve) -> Result<(), ModelError> {
        let params = Lich05Params::from_slice(params);
        let grid = self.trial.grid;
        let dt = self.trial.dt();
        out.reshape(self.channels(), grid);
        for (c, m) in self.trial.muscles.iter().enumerate() {
            let hc = HillConfig::for_muscle(&m.params, params.g);
            let fl = &self.fl[c * grid..(c + 1) * grid];
            let mut run = 0usize;
            for (k, o) in out.channel_mut(c).iter_mut().enumerate() {
                run = if m.act[k] > params.t_act { run + 1 } else { 0 };
                let mut state = m.state(k);
                state.tstim = run as f64 * dt;
                *o = lich05_rate_with(&state, &m.params, &hc, fl[k], &params, self.length_scaling);
            }
        }
        Ok(())
    }
}
