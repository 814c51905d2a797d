//! Gait trial data model.
//!
//! Series are stored column-wise on a uniform gait-cycle grid. Fibre
//! velocities use one sign convention everywhere: shortening is positive.

mod io;
mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_dataset, resample_periodic, write_dataset, MANIFEST_FILE};
pub use synth::{
    default_muscle_table, synth_dataset, synth_trial, ChannelLayout, DatasetSpec, Profile,
    SynthError, SynthTarget, TrialSpec,
};

/// Default number of samples per gait cycle.
pub const DEFAULT_GRID: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    /// Body mass in kg.
    pub mass: f64,
    /// Body height in m.
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialCondition {
    /// Walking speed in m/s.
    pub speed: f64,
    /// Treadmill incline as a fraction (0.08 = 8 %).
    pub incline: f64,
}

/// Per-muscle constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuscleParams {
    /// Maximum isometric force, N.
    pub f_max: f64,
    /// Optimal fibre length, m.
    pub l_ce_opt: f64,
    /// Width of the force-length curve (dimensionless).
    pub width: f64,
    /// Fast-twitch fibre fraction in [0, 1].
    pub r_ft: f64,
    /// Maximum fibre velocity in optimal lengths per second.
    pub v_max_norm: f64,
}

/// Instantaneous state of one muscle at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MuscleState {
    pub act: f64,
    pub stim: f64,
    pub lce_norm: f64,
    /// Normalized fibre velocity, shortening positive.
    pub vce_norm: f64,
    /// Duration of the current supra-threshold activation run, s.
    pub tstim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub q: f64,
    pub qdot: f64,
    pub qddot: f64,
    pub moment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuscleSeries {
    pub name: String,
    pub params: MuscleParams,
    pub act: Vec<f64>,
    pub stim: Vec<f64>,
    pub lce: Vec<f64>,
    pub vce: Vec<f64>,
}

impl MuscleSeries {
    pub fn state(&self, k: usize) -> MuscleState {
        MuscleState {
            act: self.act[k],
            stim: self.stim[k],
            lce_norm: self.lce[k],
            vce_norm: self.vce[k],
            tstim: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSeries {
    pub name: String,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub qddot: Vec<f64>,
    pub moment: Vec<f64>,
}

impl JointSeries {
    pub fn state(&self, k: usize) -> JointState {
        JointState {
            q: self.q[k],
            qdot: self.qdot[k],
            qddot: self.qddot[k],
            moment: self.moment[k],
        }
    }
}

/// One recorded walking condition of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTrial {
    pub id: String,
    pub subject: Subject,
    pub condition: TrialCondition,
    /// Duration of one gait cycle, s.
    pub duration: f64,
    pub grid: usize,
    pub muscles: Vec<MuscleSeries>,
    pub joints: Vec<JointSeries>,
    /// Trial-average measured cost, J/(kg m).
    pub measured_cost: f64,
}

impl GaitTrial {
    /// Integration timestep `T / grid`.
    pub fn dt(&self) -> f64 {
        self.duration / self.grid as f64
    }

    /// Every field that must satisfy the data-model invariants.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let trial = Some(self.id.as_str());
        let mut bad = |field: String, row: Option<usize>, message: String| {
            out.push(Violation::new(trial, field, row, message));
        };
        if !(self.subject.mass > 0.0) {
            bad("subject.mass".into(), None, format!("mass must be > 0, got {}", self.subject.mass));
        }
        if !(self.subject.height > 0.0) {
            bad("subject.height".into(), None, format!("height must be > 0, got {}", self.subject.height));
        }
        if !(self.condition.speed > 0.0) {
            bad("speed".into(), None, format!("speed must be > 0, got {}", self.condition.speed));
        }
        if !self.condition.incline.is_finite() {
            bad("incline".into(), None, "incline must be finite".into());
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            bad("duration".into(), None, format!("duration must be > 0, got {}", self.duration));
        }
        if self.grid < 2 {
            bad("grid".into(), None, format!("grid must be >= 2, got {}", self.grid));
        }
        if !self.measured_cost.is_finite() {
            bad("measured_cost".into(), None, "measured_cost must be finite".into());
        }
        for m in &self.muscles {
            let p = &m.params;
            let checks = [
                ("f_max", p.f_max > 0.0, p.f_max),
                ("l_ce_opt", p.l_ce_opt > 0.0, p.l_ce_opt),
                ("width", p.width > 0.0, p.width),
                ("r_ft", (0.0..=1.0).contains(&p.r_ft), p.r_ft),
                ("v_max_norm", p.v_max_norm > 0.0, p.v_max_norm),
            ];
            for (name, ok, value) in checks {
                if !ok {
                    bad(format!("{}.{name}", m.name), None, format!("out of range: {value}"));
                }
            }
            let columns: [(&str, &Vec<f64>); 4] =
                [("a", &m.act), ("e", &m.stim), ("lce", &m.lce), ("vce", &m.vce)];
            for (suffix, series) in columns {
                let field = format!("{}.{suffix}", m.name);
                if series.len() != self.grid {
                    bad(field, None, format!("length {} differs from grid {}", series.len(), self.grid));
                    continue;
                }
                for (k, &v) in series.iter().enumerate() {
                    let ok = match suffix {
                        "a" | "e" => (0.0..=1.0).contains(&v),
                        "lce" => v > 0.0 && v.is_finite(),
                        _ => v.is_finite(),
                    };
                    if !ok {
                        bad(field.clone(), Some(k), format!("invalid value {v}"));
                    }
                }
            }
        }
        for j in &self.joints {
            let columns: [(&str, &Vec<f64>); 4] =
                [("q", &j.q), ("qdot", &j.qdot), ("qddot", &j.qddot), ("M", &j.moment)];
            for (suffix, series) in columns {
                let field = format!("{}.{suffix}", j.name);
                if series.len() != self.grid {
                    bad(field, None, format!("length {} differs from grid {}", series.len(), self.grid));
                    continue;
                }
                if let Some(k) = series.iter().position(|v| !v.is_finite()) {
                    bad(field, Some(k), format!("non-finite value {}", series[k]));
                }
            }
        }
        out
    }
}

/// A collection of trials sharing one channel layout and grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub grid: usize,
    pub muscle_names: Vec<String>,
    pub joint_names: Vec<String>,
    pub trials: Vec<GaitTrial>,
}

impl Dataset {
    /// Builds a dataset from trials, taking the layout from the first one.
    pub fn from_trials(trials: Vec<GaitTrial>) -> Result<Self, DataError> {
        let first = trials.first().ok_or(DataError::Empty)?;
        let ds = Dataset {
            grid: first.grid,
            muscle_names: first.muscles.iter().map(|m| m.name.clone()).collect(),
            joint_names: first.joints.iter().map(|j| j.name.clone()).collect(),
            trials,
        };
        let violations = ds.violations();
        if violations.is_empty() {
            Ok(ds)
        } else {
            Err(DataError::Invalid(violations))
        }
    }

    /// Subjects in order of first appearance.
    pub fn subjects(&self) -> Vec<&Subject> {
        let mut seen = Vec::<&Subject>::new();
        for t in &self.trials {
            if !seen.iter().any(|s| s.id == t.subject.id) {
                seen.push(&t.subject);
            }
        }
        seen
    }

    /// Trial indices grouped by subject, in subject order.
    pub fn trials_by_subject(&self) -> Vec<(String, Vec<usize>)> {
        let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
        for (i, t) in self.trials.iter().enumerate() {
            match groups.iter_mut().find(|(id, _)| *id == t.subject.id) {
                Some((_, idx)) => idx.push(i),
                None => groups.push((t.subject.id.clone(), vec![i])),
            }
        }
        groups
    }

    pub fn measured_costs(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.measured_cost).collect()
    }

    pub fn subject_ids_per_trial(&self) -> Vec<String> {
        self.trials.iter().map(|t| t.subject.id.clone()).collect()
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.trials.is_empty() {
            out.push(Violation::new(None, "trials".into(), None, "dataset has no trials".into()));
            return out;
        }
        let mut subjects: BTreeMap<&str, &Subject> = BTreeMap::new();
        let mut trial_ids = BTreeMap::new();
        for t in &self.trials {
            if trial_ids.insert(t.id.as_str(), ()).is_some() {
                out.push(Violation::new(Some(&t.id), "id".into(), None, "duplicate trial id".into()));
            }
            match subjects.get(t.subject.id.as_str()) {
                Some(s) if **s != t.subject => out.push(Violation::new(
                    Some(&t.id),
                    "subject".into(),
                    None,
                    format!("subject {} declared with conflicting attributes", t.subject.id),
                )),
                Some(_) => {}
                None => {
                    subjects.insert(t.subject.id.as_str(), &t.subject);
                }
            }
            if t.grid != self.grid {
                out.push(Violation::new(
                    Some(&t.id),
                    "grid".into(),
                    None,
                    format!("grid {} differs from dataset grid {}", t.grid, self.grid),
                ));
            }
            let muscles: Vec<&str> = t.muscles.iter().map(|m| m.name.as_str()).collect();
            let joints: Vec<&str> = t.joints.iter().map(|j| j.name.as_str()).collect();
            if muscles != self.muscle_names.iter().map(String::as_str).collect::<Vec<_>>() {
                out.push(Violation::new(Some(&t.id), "muscles".into(), None, "muscle set differs from dataset".into()));
            }
            if joints != self.joint_names.iter().map(String::as_str).collect::<Vec<_>>() {
                out.push(Violation::new(Some(&t.id), "joints".into(), None, "joint set differs from dataset".into()));
            }
            out.extend(t.violations());
        }
        out
    }
}

/// One broken invariant, located as precisely as possible.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub trial: Option<String>,
    pub field: String,
    pub row: Option<usize>,
    pub message: String,
}

impl Violation {
    pub fn new(trial: Option<&str>, field: String, row: Option<usize>, message: String) -> Self {
        Violation { trial: trial.map(str::to_owned), field, row, message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = &self.trial {
            write!(f, "trial {t}: ")?;
        }
        write!(f, "field {}", self.field)?;
        if let Some(r) = self.row {
            write!(f, " row {r}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("dataset has no trials")]
    Empty,
    #[error("schema violation: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(matches!(Dataset::from_trials(vec![]), Err(DataError::Empty)));
    }

    #[test]
    fn activation_above_one_names_field_and_row() {
        let spec = DatasetSpec::small(2, 3);
        let mut ds = synth_dataset(&spec, 1).unwrap();
        ds.trials[0].muscles[1].act[4] = 1.2;
        let v = ds.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, format!("{}.a", ds.muscle_names[1]));
        assert_eq!(v[0].row, Some(4));
        assert_eq!(v[0].trial.as_deref(), Some(ds.trials[0].id.as_str()));
    }

    #[test]
    fn trials_group_by_subject() {
        let ds = synth_dataset(&DatasetSpec::small(3, 2), 5).unwrap();
        let groups = ds.trials_by_subject();
        assert_eq!(groups.len(), 3);
        assert!(groups.iter().all(|(_, idx)| idx.len() == ds.trials.len() / 3));
        assert_eq!(ds.subjects().len(), 3);
    }
}
