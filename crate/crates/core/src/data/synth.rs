//! Synthetic gait trials whose measured cost is produced by a known
//! generator, so downstream fitting has an exact ground truth.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Dataset, GaitTrial, JointSeries, MuscleParams, MuscleSeries, Subject, TrialCondition};
use crate::cost::{cost_from_curve, trial_cost, CostOptions};
use crate::models::{ModelError, ModelRegistry, RateCurve};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator settings: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Shape of the generated state series.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// Smooth periodic profiles with per-trial random amplitudes and phases.
    Sinusoidal,
    /// Every sample of every channel holds the same values.
    Constant { act: f64, vce: f64, lce: f64, qdot: f64, moment: f64 },
}

/// How `measured_cost` is produced for a generated trial.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthTarget {
    /// Cost of a registered model with the given parameters.
    Model { model: String, params: Vec<f64> },
    /// A constant total metabolic rate in W, split evenly over channels.
    ConstantRate { watts: f64 },
    /// Per-muscle rate `gain * m * a * |v|` with `gain` in W/kg. The
    /// body-mass factor cancels in the cost, which then depends on
    /// activation and fibre velocity only.
    ActivationVelocity { gain: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelLayout {
    /// 1 (right leg only) or 2 (both legs).
    pub legs: usize,
    pub muscles_per_leg: usize,
    pub joints_per_leg: usize,
}

impl ChannelLayout {
    pub const BOTH_LEGS: ChannelLayout = ChannelLayout { legs: 2, muscles_per_leg: 8, joints_per_leg: 3 };

    fn validate(&self) -> Result<(), SynthError> {
        if !(1..=2).contains(&self.legs) {
            return Err(SynthError::InvalidSpec(format!("legs must be 1 or 2, got {}", self.legs)));
        }
        if self.muscles_per_leg > MUSCLES.len() || self.joints_per_leg > JOINTS.len() {
            return Err(SynthError::InvalidSpec(format!(
                "at most {} muscles and {} joints per leg",
                MUSCLES.len(),
                JOINTS.len()
            )));
        }
        Ok(())
    }

    pub fn muscle_names(&self) -> Vec<String> {
        self.names(MUSCLES.iter().map(|m| m.0).take(self.muscles_per_leg))
    }

    pub fn joint_names(&self) -> Vec<String> {
        self.names(JOINTS.iter().copied().take(self.joints_per_leg))
    }

    fn names<'a>(&self, base: impl Iterator<Item = &'a str> + Clone) -> Vec<String> {
        (0..self.legs)
            .flat_map(|leg| {
                let side = if leg == 0 { "r" } else { "l" };
                base.clone().map(move |b| format!("{b}_{side}"))
            })
            .collect()
    }
}

/// Settings for a single synthetic trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub id: String,
    pub subject: Subject,
    pub condition: TrialCondition,
    /// Gait-cycle duration; `None` derives it from walking speed.
    pub duration: Option<f64>,
    pub grid: usize,
    pub layout: ChannelLayout,
    pub profile: Profile,
    pub target: SynthTarget,
}

/// Settings for a whole synthetic dataset: every subject walks every
/// (speed, incline) combination once.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub subjects: usize,
    pub speeds: Vec<f64>,
    pub inclines: Vec<f64>,
    pub grid: usize,
    pub layout: ChannelLayout,
    pub profile: Profile,
    pub target: SynthTarget,
}

impl DatasetSpec {
    /// Twelve subjects, two speeds, three inclines, both legs.
    pub fn full(target: SynthTarget) -> Self {
        DatasetSpec {
            subjects: 12,
            speeds: vec![0.8, 1.3],
            inclines: vec![-0.08, 0.0, 0.08],
            grid: super::DEFAULT_GRID,
            layout: ChannelLayout::BOTH_LEGS,
            profile: Profile::Sinusoidal,
            target,
        }
    }

    /// A small one-leg dataset generated by the original MARG68 model.
    pub fn small(subjects: usize, muscles: usize) -> Self {
        DatasetSpec {
            subjects,
            speeds: vec![0.8, 1.3],
            inclines: vec![-0.08, 0.08],
            grid: 50,
            layout: ChannelLayout { legs: 1, muscles_per_leg: muscles, joints_per_leg: 2 },
            profile: Profile::Sinusoidal,
            target: SynthTarget::Model { model: "MARG68".into(), params: vec![0.25, 1.2] },
        }
    }

    /// Desk-scale feature-sweep set: ten subjects, six conditions, one leg
    /// with four muscles on a 25-sample grid, cost from activation and
    /// fibre velocity only.
    pub fn learnable(gain: f64) -> Self {
        DatasetSpec {
            subjects: 10,
            speeds: vec![0.8, 1.3],
            inclines: vec![-0.08, 0.0, 0.08],
            grid: 25,
            layout: ChannelLayout { legs: 1, muscles_per_leg: 4, joints_per_leg: 2 },
            profile: Profile::Sinusoidal,
            target: SynthTarget::ActivationVelocity { gain },
        }
    }
}

/// (name, f_max N, l_ce_opt m, width, r_ft)
const MUSCLES: [(&str, f64, f64, f64, f64); 8] = [
    ("hamstrings", 2594.0, 0.109, 0.56, 0.49),
    ("glutei", 1944.0, 0.200, 0.62, 0.45),
    ("iliopsoas", 2342.0, 0.102, 0.56, 0.50),
    ("rectus_femoris", 1169.0, 0.081, 0.50, 0.58),
    ("vasti", 4530.0, 0.093, 0.52, 0.50),
    ("gastrocnemius", 2241.0, 0.055, 0.58, 0.49),
    ("soleus", 3549.0, 0.055, 0.64, 0.20),
    ("tibialis_anterior", 1759.0, 0.082, 0.66, 0.27),
];
const JOINTS: [&str; 3] = ["hip", "knee", "ankle"];
const V_MAX_NORM: f64 = 10.0;
const REFERENCE_MASS: f64 = 70.0;

/// Default per-muscle constants for a subject of `mass` kg.
pub fn default_muscle_table(mass: f64) -> Vec<(String, MuscleParams)> {
    let scale = (mass / REFERENCE_MASS).powf(2.0 / 3.0);
    MUSCLES
        .iter()
        .map(|&(name, f_max, l_ce_opt, width, r_ft)| {
            (name.to_string(), MuscleParams { f_max: f_max * scale, l_ce_opt, width, r_ft, v_max_norm: V_MAX_NORM })
        })
        .collect()
}

fn cycle_duration(speed: f64) -> f64 {
    0.9 + 0.2 / speed
}

/// Generates one trial. Deterministic for a fixed `seed`; random draws do
/// not depend on `grid`, so the same seed at a finer grid samples the same
/// underlying continuous profiles.
pub fn synth_trial(spec: &TrialSpec, seed: u64) -> Result<GaitTrial, SynthError> {
    spec.layout.validate()?;
    if spec.grid < 2 {
        return Err(SynthError::InvalidSpec(format!("grid must be >= 2, got {}", spec.grid)));
    }
    if !(spec.subject.mass > 0.0) || !(spec.condition.speed > 0.0) {
        return Err(SynthError::InvalidSpec("mass and speed must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speed = spec.condition.speed;
    let incline = spec.condition.incline;
    let duration = match spec.duration {
        Some(d) => d,
        None => cycle_duration(speed) * rng.gen_range(0.97..1.03),
    };
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(SynthError::InvalidSpec(format!("duration must be positive, got {duration}")));
    }
    let grid = spec.grid;
    let omega = TAU / duration;
    let times: Vec<f64> = (0..grid).map(|k| k as f64 * duration / grid as f64).collect();
    let sine = |amp: f64, phase: f64, offset: f64| -> Vec<f64> {
        times.iter().map(|t| offset + amp * (omega * t + phase).sin()).collect()
    };
    let intensity = (speed / 1.3) * (1.0 + 4.0 * incline);
    let table = default_muscle_table(spec.subject.mass);

    let mut muscles = Vec::new();
    let mut per_leg = Vec::new();
    for &(_, params) in table.iter().take(spec.layout.muscles_per_leg) {
        let draws: [f64; 12] = std::array::from_fn(|_| rng.gen::<f64>());
        per_leg.push((params, draws));
    }
    for leg in 0..spec.layout.legs {
        let shift = leg as f64 * std::f64::consts::PI;
        for (i, (params, d)) in per_leg.iter().enumerate() {
            let name = spec.layout.muscle_names()[leg * spec.layout.muscles_per_leg + i].clone();
            let series = match &spec.profile {
                Profile::Constant { act, vce, lce, .. } => MuscleSeries {
                    name,
                    params: *params,
                    act: vec![*act; grid],
                    stim: vec![*act; grid],
                    lce: vec![*lce; grid],
                    vce: vec![*vce; grid],
                },
                Profile::Sinusoidal => {
                    let a0 = (0.05 + 0.08 * d[0]) * (0.6 + 0.4 * intensity);
                    let a1 = (0.3 + 0.6 * d[1]) * a0;
                    let e0 = 0.10 + 0.20 * d[2];
                    let e1 = (0.3 + 0.6 * d[3]) * e0;
                    let v1 = (0.3 + 0.9 * d[4]) * (0.5 + 0.5 * speed / 1.3);
                    let v0 = v1 * (0.4 * d[5] - 0.2 + 2.5 * incline);
                    let l0 = 0.85 + 0.3 * d[6];
                    let l1 = 0.05 + 0.15 * d[7];
                    MuscleSeries {
                        name,
                        params: *params,
                        act: sine(a1, TAU * d[8] + shift, a0),
                        stim: sine(e1, TAU * d[9] + shift, e0),
                        lce: sine(l1, TAU * d[10] + shift, l0),
                        vce: sine(v1, TAU * d[11] + shift, v0),
                    }
                }
            };
            muscles.push(series);
        }
    }

    let mut joints = Vec::new();
    let joint_draws: Vec<[f64; 5]> = (0..spec.layout.joints_per_leg)
        .map(|_| std::array::from_fn(|_| rng.gen::<f64>()))
        .collect();
    let mass = spec.subject.mass;
    for leg in 0..spec.layout.legs {
        let shift = leg as f64 * std::f64::consts::PI;
        for (j, d) in joint_draws.iter().enumerate() {
            let name = spec.layout.joint_names()[leg * spec.layout.joints_per_leg + j].clone();
            let series = match &spec.profile {
                Profile::Constant { qdot, moment, .. } => JointSeries {
                    name,
                    q: times.iter().map(|t| qdot * t).collect(),
                    qdot: vec![*qdot; grid],
                    qddot: vec![0.0; grid],
                    moment: vec![*moment; grid],
                },
                Profile::Sinusoidal => {
                    let q0 = 0.4 * d[0] - 0.2;
                    let q1 = (0.2 + 0.4 * d[1]) * (0.6 + 0.4 * speed / 1.3);
                    let phase_q = TAU * d[2] + shift;
                    let m0 = mass * (0.4 * d[3] - 0.2 + 3.0 * incline);
                    let m1 = mass * (0.3 + 0.7 * d[4]) * (0.6 + 0.4 * intensity);
                    JointSeries {
                        name,
                        q: sine(q1, phase_q, q0),
                        qdot: times.iter().map(|t| q1 * omega * (omega * t + phase_q).cos()).collect(),
                        qddot: times.iter().map(|t| -q1 * omega * omega * (omega * t + phase_q).sin()).collect(),
                        moment: sine(m1, phase_q + TAU * d[2] * 0.5, m0),
                    }
                }
            };
            joints.push(series);
        }
    }

    let mut trial = GaitTrial {
        id: spec.id.clone(),
        subject: spec.subject.clone(),
        condition: spec.condition,
        duration,
        grid,
        muscles,
        joints,
        measured_cost: 0.0,
    };
    trial.measured_cost = target_cost(&spec.target, &trial)?;
    if !trial.measured_cost.is_finite() {
        return Err(SynthError::InvalidSpec("generator produced a non-finite cost".into()));
    }
    Ok(trial)
}

fn target_cost(target: &SynthTarget, trial: &GaitTrial) -> Result<f64, SynthError> {
    let opts = CostOptions::default();
    match target {
        SynthTarget::Model { model, params } => {
            let registry = ModelRegistry::builtin();
            let model = registry.get(model)?;
            Ok(trial_cost(model, trial, params, &opts)?)
        }
        SynthTarget::ConstantRate { watts } => {
            let channels = trial.muscles.len().max(1);
            let mut curve = RateCurve::zeros(channels, trial.grid);
            curve.data.fill(watts / channels as f64);
            Ok(cost_from_curve(&curve, trial, &opts))
        }
        SynthTarget::ActivationVelocity { gain } => {
            let mut curve = RateCurve::zeros(trial.muscles.len(), trial.grid);
            for (c, m) in trial.muscles.iter().enumerate() {
                for (k, out) in curve.channel_mut(c).iter_mut().enumerate() {
                    *out = gain * trial.subject.mass * m.act[k] * m.vce[k].abs();
                }
            }
            Ok(cost_from_curve(&curve, trial, &opts))
        }
    }
}

/// Generates every (subject, speed, incline) trial of `spec`.
pub fn synth_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset, SynthError> {
    if spec.subjects == 0 || spec.speeds.is_empty() || spec.inclines.is_empty() {
        return Err(SynthError::InvalidSpec("need at least one subject, speed and incline".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::new();
    for s in 0..spec.subjects {
        let subject = Subject {
            id: format!("S{:02}", s + 1),
            mass: 55.0 + 35.0 * rng.gen::<f64>(),
            height: 1.60 + 0.25 * rng.gen::<f64>(),
        };
        for &speed in &spec.speeds {
            for &incline in &spec.inclines {
                let trial_spec = TrialSpec {
                    id: format!("{}_v{:.1}_i{:+.0}", subject.id, speed, incline * 100.0),
                    subject: subject.clone(),
                    condition: TrialCondition { speed, incline },
                    duration: None,
                    grid: spec.grid,
                    layout: spec.layout,
                    profile: spec.profile.clone(),
                    target: spec.target.clone(),
                };
                trials.push(synth_trial(&trial_spec, rng.gen())?);
            }
        }
    }
    Dataset::from_trials(trials).map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_spec(target: SynthTarget) -> TrialSpec {
        TrialSpec {
            id: "c".into(),
            subject: Subject { id: "S".into(), mass: 70.0, height: 1.75 },
            condition: TrialCondition { speed: 1.3, incline: 0.0 },
            duration: Some(1.1),
            grid: 100,
            layout: ChannelLayout { legs: 1, muscles_per_leg: 4, joints_per_leg: 3 },
            profile: Profile::Constant { act: 0.0, vce: 0.5, lce: 1.0, qdot: 0.0, moment: 0.0 },
            target,
        }
    }

    #[test]
    fn constant_rate_cost_is_power_over_mass_speed() {
        let t = synth_trial(&constant_spec(SynthTarget::ConstantRate { watts: 280.0 }), 3).unwrap();
        let expected = 280.0 / (70.0 * 1.3);
        assert!((t.measured_cost - expected).abs() < 1e-9 * expected);
        assert!((t.measured_cost - 3.076923076923077).abs() < 1e-9);
    }

    #[test]
    fn zero_activation_mine97_costs_nothing() {
        let target = SynthTarget::Model { model: "MINE97".into(), params: crate::models::mine97::ORIGINAL.to_vec() };
        let t = synth_trial(&constant_spec(target), 3).unwrap();
        assert_eq!(t.measured_cost, 0.0);
    }

    #[test]
    fn same_seed_same_trial() {
        let mut spec = constant_spec(SynthTarget::Model { model: "MARG68".into(), params: vec![0.25, 1.2] });
        spec.profile = Profile::Sinusoidal;
        spec.duration = None;
        let a = synth_trial(&spec, 42).unwrap();
        let b = synth_trial(&spec, 42).unwrap();
        let c = synth_trial(&spec, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_non_positive_duration() {
        let mut spec = constant_spec(SynthTarget::ConstantRate { watts: 1.0 });
        spec.duration = Some(0.0);
        assert!(matches!(synth_trial(&spec, 0), Err(SynthError::InvalidSpec(_))));
        spec.duration = Some(-1.0);
        assert!(synth_trial(&spec, 0).is_err());
    }

    #[test]
    fn generated_states_satisfy_invariants() {
        let ds = synth_dataset(&DatasetSpec::full(SynthTarget::ConstantRate { watts: 300.0 }), 9).unwrap();
        assert_eq!(ds.trials.len(), 72);
        assert_eq!(ds.muscle_names.len(), 16);
        assert_eq!(ds.joint_names.len(), 6);
        assert!(ds.violations().is_empty());
    }
}
