//! Hill-type force-length and force-velocity relationships.
//!
//! Velocities are normalized by optimal fibre length and are positive during
//! shortening.

use crate::data::MuscleParams;

/// Curvature used when a model does not carry its own.
pub const DEFAULT_CURVATURE: f64 = 4.0;
/// Eccentric force asymptote relative to isometric force.
pub const DEFAULT_ECC_PLATEAU: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillConfig {
    pub width: f64,
    pub curvature: f64,
    pub ecc_plateau: f64,
    pub vmax_norm: f64,
}

impl HillConfig {
    pub fn for_muscle(mp: &MuscleParams, curvature: f64) -> Self {
        HillConfig { width: mp.width, curvature, ecc_plateau: DEFAULT_ECC_PLATEAU, vmax_norm: mp.v_max_norm }
    }

    pub fn f_fl(&self, lce_norm: f64) -> f64 {
        f_fl(lce_norm, self.width)
    }

    pub fn f_fv(&self, vce_norm: f64) -> f64 {
        f_fv(vce_norm, self.curvature, self.vmax_norm, self.ecc_plateau)
    }
}

/// Gaussian force-length curve, 1 at optimal length.
pub fn f_fl(lce_norm: f64, width: f64) -> f64 {
    let x = (lce_norm - 1.0) / width;
    (-x * x).exp()
}

/// Force-velocity curve.
///
/// Concentric side is the Hill hyperbola `(1 - v) / (1 + G v)` with
/// `v = vce / vmax` capped at 1. The eccentric side rises from 1 towards
/// `ecc_plateau` with a slope matching the concentric branch at `v = 0`.
pub fn f_fv(vce_norm: f64, curvature: f64, vmax_norm: f64, ecc_plateau: f64) -> f64 {
    let v = vce_norm / vmax_norm;
    if v >= 0.0 {
        let v = v.min(1.0);
        (1.0 - v) / (1.0 + curvature * v)
    } else {
        let u = -v;
        let k = (1.0 + curvature) / (ecc_plateau - 1.0);
        1.0 + (ecc_plateau - 1.0) * k * u / (1.0 + k * u)
    }
}

/// Contractile element force `F_max a f_FL f_FV`, N.
pub fn ce_force(act: f64, lce_norm: f64, vce_norm: f64, mp: &MuscleParams, hc: &HillConfig) -> f64 {
    mp.f_max * act * hc.f_fl(lce_norm) * hc.f_fv(vce_norm)
}

/// Mechanical fibre power, W. Positive while shortening.
pub fn ce_power(act: f64, lce_norm: f64, vce_norm: f64, mp: &MuscleParams, hc: &HillConfig) -> f64 {
    ce_force(act, lce_norm, vce_norm, mp, hc) * vce_norm * mp.l_ce_opt
}
