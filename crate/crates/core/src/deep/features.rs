use serde::{Deserialize, Serialize};

use super::DeepError;
use crate::data::GaitTrial;

/// Channel space a network operates in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSpace {
    Muscle,
    Joint,
}

pub const MUSCLE_FEATURES: [&str; 8] = ["lce", "vce", "act", "f_max", "r_ft", "width", "l_opt", "stim"];
pub const JOINT_FEATURES: [&str; 4] = ["q", "qdot", "qddot", "moment"];

impl FeatureSpace {
    pub fn feature_names(self) -> &'static [&'static str] {
        match self {
            FeatureSpace::Muscle => &MUSCLE_FEATURES,
            FeatureSpace::Joint => &JOINT_FEATURES,
        }
    }

    pub fn n_features(self) -> usize {
        self.feature_names().len()
    }

    pub fn feature_index(self, name: &str) -> Option<usize> {
        self.feature_names().iter().position(|n| n.eq_ignore_ascii_case(name))
    }
}

impl std::str::FromStr for FeatureSpace {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "muscle" => Ok(FeatureSpace::Muscle),
            "joint" => Ok(FeatureSpace::Joint),
            _ => Err(format!("unknown feature space {s:?} (muscle|joint)")),
        }
    }
}

/// Non-empty subset of a space's features; bit `i` selects feature `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSet {
    pub space: FeatureSpace,
    pub mask: u32,
}

impl FeatureSet {
    pub fn new(space: FeatureSpace, mask: u32) -> Result<Self, DeepError> {
        if mask == 0 || mask >> space.n_features() != 0 {
            return Err(DeepError::FeatureSet(format!("mask {mask:#b} invalid for {space:?} space")));
        }
        Ok(FeatureSet { space, mask })
    }

    pub fn from_names(space: FeatureSpace, names: &[&str]) -> Result<Self, DeepError> {
        let mut mask = 0;
        for n in names {
            let i = space
                .feature_index(n)
                .ok_or_else(|| DeepError::FeatureSet(format!("unknown {space:?} feature {n:?}")))?;
            mask |= 1 << i;
        }
        Self::new(space, mask)
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.space.n_features()).filter(|&i| self.contains(i)).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.mask >> i) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    /// Member names joined by `+`.
    pub fn label(&self) -> String {
        let names = self.space.feature_names();
        self.members().iter().map(|&i| names[i]).collect::<Vec<_>>().join("+")
    }
}

/// All non-empty subsets in increasing mask order.
pub fn enumerate_feature_sets(space: FeatureSpace) -> Vec<FeatureSet> {
    (1..1u32 << space.n_features()).map(|mask| FeatureSet { space, mask }).collect()
}

/// Network inputs of one trial: one row per (channel, sample), channel-major
/// so that outputs line up with a `RateCurve`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialInputs {
    pub channels: usize,
    pub grid: usize,
    pub n_features: usize,
    pub data: Vec<f64>,
}

impl TrialInputs {
    pub fn rows(&self) -> usize {
        self.channels * self.grid
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_features..(r + 1) * self.n_features]
    }
}

/// Extracts the selected features of every channel. Per-muscle constants
/// are repeated at every sample.
pub fn trial_features(trial: &GaitTrial, set: &FeatureSet) -> TrialInputs {
    let members = set.members();
    let grid = trial.grid;
    let mut data = Vec::new();
    let channels = match set.space {
        FeatureSpace::Muscle => {
            for m in &trial.muscles {
                let p = &m.params;
                for k in 0..grid {
                    let all = [m.lce[k], m.vce[k], m.act[k], p.f_max, p.r_ft, p.width, p.l_ce_opt, m.stim[k]];
                    data.extend(members.iter().map(|&i| all[i]));
                }
            }
            trial.muscles.len()
        }
        FeatureSpace::Joint => {
            for j in &trial.joints {
                for k in 0..grid {
                    let all = [j.q[k], j.qdot[k], j.qddot[k], j.moment[k]];
                    data.extend(members.iter().map(|&i| all[i]));
                }
            }
            trial.joints.len()
        }
    };
    TrialInputs { channels, grid, n_features: members.len(), data }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumerate_feature_sets(FeatureSpace::Joint).len(), 15);
        let m = enumerate_feature_sets(FeatureSpace::Muscle);
        assert_eq!(m.len(), 255);
        for i in 0..8 {
            assert_eq!(m.iter().filter(|s| s.len() == 1 && s.contains(i)).count(), 1);
        }
    }

    #[test]
    fn names_and_masks() {
        let s = FeatureSet::from_names(FeatureSpace::Joint, &["moment", "qdot"]).unwrap();
        assert_eq!(s.mask, 0b1010);
        assert_eq!(s.label(), "qdot+moment");
        assert!(FeatureSet::new(FeatureSpace::Joint, 0).is_err());
        assert!(FeatureSet::new(FeatureSpace::Joint, 16).is_err());
        assert!(FeatureSet::from_names(FeatureSpace::Muscle, &["q"]).is_err());
    }
}
