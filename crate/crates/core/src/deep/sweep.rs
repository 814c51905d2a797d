use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureSet, FeatureSpace};
use super::mlp::Activation;
use super::train::{split_indices, train_inexact, MlpSpec};
use super::DeepError;
use crate::data::{Dataset, GaitTrial};
use crate::metrics::{rmse, PairedCosts};
use crate::parallel::with_jobs;

/// Random-search ranges for hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub layers: (usize, usize),
    pub widths: Vec<usize>,
    /// Log-uniform bounds.
    pub lr: (f64, f64),
    pub batch_sizes: Vec<usize>,
    /// Log-uniform bounds.
    pub weight_decay: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            layers: (1, 4),
            widths: vec![16, 32, 64, 128, 256],
            lr: (1e-4, 1e-2),
            batch_sizes: vec![4, 8, 16],
            weight_decay: (1e-6, 1e-3),
        }
    }
}

impl SearchSpace {
    /// Draws a spec; schedule fields and the activation come from `base`.
    pub fn sample(&self, base: &MlpSpec, rng: &mut impl Rng) -> MlpSpec {
        let log_uniform = |rng: &mut dyn rand::RngCore, (lo, hi): (f64, f64)| -> f64 {
            (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
        };
        let layers = rng.gen_range(self.layers.0..=self.layers.1);
        let hidden = (0..layers).map(|_| self.widths[rng.gen_range(0..self.widths.len())]).collect();
        MlpSpec {
            hidden,
            lr: log_uniform(rng, self.lr),
            batch_size: self.batch_sizes[rng.gen_range(0..self.batch_sizes.len())],
            weight_decay: log_uniform(rng, self.weight_decay),
            ..base.clone()
        }
    }
}

/// Compute budget of a feature sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBudget {
    /// Random-search draws on the first fold; 0 trains `base` directly.
    pub draws: usize,
    pub search: SearchSpace,
    /// Architecture used when `draws == 0`, and the schedule for every draw.
    pub base: MlpSpec,
    /// Share of each training fold used for fitting; the rest drives early stopping.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SweepBudget {
    fn default() -> Self {
        SweepBudget {
            draws: 30,
            search: SearchSpace::default(),
            base: MlpSpec::default(),
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

impl SweepBudget {
    /// Small networks and short schedules for desk-scale runs.
    pub fn desk() -> Self {
        SweepBudget {
            draws: 0,
            base: MlpSpec {
                hidden: vec![16],
                activation: Activation::Relu,
                lr: 3e-2,
                weight_decay: 1e-6,
                batch_size: 4,
                max_epochs: 150,
                patience: 30,
                seed: 0,
            },
            ..SweepBudget::default()
        }
    }
}

/// Stable seed for one (feature set, fold, draw, purpose) combination.
fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h = (h ^ p).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h
}

fn trials_of<'a>(ds: &'a Dataset, idx: &[usize]) -> Vec<&'a GaitTrial> {
    idx.iter().map(|&i| &ds.trials[i]).collect()
}

/// Inner train/validation split of a fold's training trials.
fn fold_split(train_idx: &[usize], set: &FeatureSet, fold: usize, budget: &SweepBudget) -> (Vec<usize>, Vec<usize>) {
    split_indices(train_idx, budget.train_fraction, derive_seed(budget.seed, &[set.mask as u64, fold as u64, 0]))
}

fn folds(ds: &Dataset) -> Result<Vec<(String, Vec<usize>, Vec<usize>)>, DeepError> {
    let groups = ds.trials_by_subject();
    if groups.len() < 2 {
        return Err(DeepError::TooFewSubjects(groups.len()));
    }
    Ok(groups
        .into_iter()
        .map(|(s, test)| {
            let train = (0..ds.trials.len()).filter(|i| !test.contains(i)).collect();
            (s, train, test)
        })
        .collect())
}

/// Validation RMSE of every search draw on the first fold.
fn search_scores(ds: &Dataset, set: &FeatureSet, budget: &SweepBudget, draw: usize) -> Result<(MlpSpec, f64), DeepError> {
    let folds = folds(ds)?;
    let (_, train_idx, _) = &folds[0];
    let (fit, valid) = fold_split(train_idx, set, 0, budget);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(budget.seed, &[set.mask as u64, draw as u64, 1]));
    let mut spec = budget.search.sample(&budget.base, &mut rng);
    spec.seed = derive_seed(budget.seed, &[set.mask as u64, draw as u64, 2]);
    let trained = train_inexact(&spec, set, &trials_of(ds, &fit), &trials_of(ds, &valid))?;
    Ok((spec, trained.best_valid_rmse().unwrap_or(f64::INFINITY)))
}

/// Hyperparameters for `set`: the best search draw on the first fold, or
/// `budget.base` when no search is requested.
pub fn tune(ds: &Dataset, set: &FeatureSet, budget: &SweepBudget) -> Result<MlpSpec, DeepError> {
    let scores: Vec<(MlpSpec, f64)> = (0..budget.draws).map(|d| search_scores(ds, set, budget, d)).collect::<Result<_, _>>()?;
    Ok(best_draw(scores, budget))
}

fn best_draw(scores: Vec<(MlpSpec, f64)>, budget: &SweepBudget) -> MlpSpec {
    scores
        .into_iter()
        .fold(None::<(MlpSpec, f64)>, |acc, (s, v)| match acc {
            Some((_, bv)) if !(v < bv) => acc,
            _ => Some((s, v)),
        })
        .map_or_else(|| budget.base.clone(), |(s, _)| s)
}

/// Held-out predictions of one fold.
fn run_fold(
    ds: &Dataset,
    set: &FeatureSet,
    spec: &MlpSpec,
    budget: &SweepBudget,
    fold: usize,
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<Vec<f64>, DeepError> {
    let (fit, valid) = fold_split(train_idx, set, fold, budget);
    let spec = MlpSpec { seed: derive_seed(budget.seed ^ spec.seed, &[set.mask as u64, fold as u64, 3]), ..spec.clone() };
    let trained = train_inexact(&spec, set, &trials_of(ds, &fit), &trials_of(ds, &valid))?;
    test_idx.iter().map(|&i| trained.predict(&ds.trials[i])).collect()
}

/// Pooled subject-wise LOO predictions of a fixed spec.
pub fn loo_predictions(ds: &Dataset, set: &FeatureSet, spec: &MlpSpec, budget: &SweepBudget) -> Result<PairedCosts, DeepError> {
    let mut pc = PairedCosts::default();
    for (f, (subject, train, test)) in folds(ds)?.iter().enumerate() {
        for (&i, p) in test.iter().zip(run_fold(ds, set, spec, budget, f, train, test)?) {
            pc.push(subject, p, ds.trials[i].measured_cost);
        }
    }
    Ok(pc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub space: FeatureSpace,
    pub mask: u32,
    pub features: String,
    pub rmse: f64,
    pub spec: MlpSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub space: FeatureSpace,
    /// Ascending LOO RMSE; ties by mask.
    pub rows: Vec<SweepRow>,
}

/// Pooled LOO RMSE of every feature set. Every training runs as an
/// independent task; the result does not depend on scheduling.
pub fn feature_sweep(ds: &Dataset, sets: &[FeatureSet], budget: &SweepBudget, jobs: usize) -> Result<SweepReport, DeepError> {
    let space = match sets.first() {
        Some(s) => s.space,
        None => return Err(DeepError::Empty("feature set list")),
    };
    if sets.iter().any(|s| s.space != space) {
        return Err(DeepError::FeatureSet("all sets must share one space".into()));
    }
    let folds = folds(ds)?;
    with_jobs(jobs, || {
        let search: Vec<(usize, usize)> = (0..sets.len()).flat_map(|s| (0..budget.draws).map(move |d| (s, d))).collect();
        let scores: Vec<(MlpSpec, f64)> = search
            .par_iter()
            .map(|&(s, d)| search_scores(ds, &sets[s], budget, d))
            .collect::<Result<_, _>>()?;
        let specs: Vec<MlpSpec> = if budget.draws == 0 {
            vec![budget.base.clone(); sets.len()]
        } else {
            scores.chunks(budget.draws).map(|c| best_draw(c.to_vec(), budget)).collect()
        };
        let tasks: Vec<(usize, usize)> = (0..sets.len()).flat_map(|s| (0..folds.len()).map(move |f| (s, f))).collect();
        let preds: Vec<Vec<f64>> = tasks
            .par_iter()
            .map(|&(s, f)| run_fold(ds, &sets[s], &specs[s], budget, f, &folds[f].1, &folds[f].2))
            .collect::<Result<_, _>>()?;
        let mut rows = Vec::with_capacity(sets.len());
        for (s, set) in sets.iter().enumerate() {
            let mut pc = PairedCosts::default();
            for (f, (subject, _, test)) in folds.iter().enumerate() {
                for (&i, &p) in test.iter().zip(&preds[s * folds.len() + f]) {
                    pc.push(subject, p, ds.trials[i].measured_cost);
                }
            }
            rows.push(SweepRow { space, mask: set.mask, features: set.label(), rmse: rmse(&pc)?, spec: specs[s].clone() });
        }
        rows.sort_by(|a, b| a.rmse.total_cmp(&b.rmse).then(a.mask.cmp(&b.mask)));
        Ok(SweepReport { space, rows })
    })
}

impl SweepReport {
    pub fn rmse_of(&self, mask: u32) -> Option<f64> {
        self.rows.iter().find(|r| r.mask == mask).map(|r| r.rmse)
    }

    /// `n x n` grid: singletons on the diagonal, pairs `{i, j}` at `[i][j]`
    /// with `i < j`; other cells empty.
    pub fn pair_heatmap(&self) -> Vec<Vec<Option<f64>>> {
        let n = self.space.n_features();
        let mut grid = vec![vec![None; n]; n];
        for (i, row) in grid.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate().skip(i) {
                *cell = self.rmse_of((1 << i) | (1 << j));
            }
        }
        grid
    }

    /// CSV with columns `mask,space,features,rmse`, ranked.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["mask", "space", "features", "rmse"])?;
        for r in &self.rows {
            let space = match r.space {
                FeatureSpace::Muscle => "muscle",
                FeatureSpace::Joint => "joint",
            };
            wr.write_record([r.mask.to_string(), space.to_string(), r.features.clone(), r.rmse.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_draws_stay_in_space() {
        let space = SearchSpace::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let s = space.sample(&MlpSpec::default(), &mut rng);
            assert!((1..=4).contains(&s.hidden.len()));
            assert!(s.hidden.iter().all(|w| space.widths.contains(w)));
            assert!((1e-4..=1e-2).contains(&s.lr));
            assert!((1e-6..=1e-3).contains(&s.weight_decay));
            assert!(space.batch_sizes.contains(&s.batch_size));
        }
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(0, &[1, 0]), derive_seed(0, &[0, 1]));
        assert_eq!(derive_seed(7, &[3]), derive_seed(7, &[3]));
    }

    #[test]
    fn heatmap_layout() {
        let row = |mask: u32, rmse: f64| SweepRow {
            space: FeatureSpace::Joint,
            mask,
            features: String::new(),
            rmse,
            spec: MlpSpec::default(),
        };
        let rows = (1..16u32).map(|m| row(m, m as f64)).collect();
        let r = SweepReport { space: FeatureSpace::Joint, rows };
        let h = r.pair_heatmap();
        let upper = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).filter(|&(i, j)| h[i][j].is_some()).count();
        assert_eq!(upper, 6);
        assert_eq!(h[1][3], Some(10.0));
        assert_eq!(h[2][2], Some(4.0));
        assert_eq!(h[3][1], None);
    }
}
