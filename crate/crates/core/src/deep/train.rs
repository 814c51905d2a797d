use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{trial_features, FeatureSet, TrialInputs};
use super::mlp::{Activation, Adam, Gradients, Mlp};
use super::scaler::Scaler;
use super::DeepError;
use crate::cost::{cost_from_curve, cost_scale, CostOptions};
use crate::data::GaitTrial;
use crate::models::RateCurve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub lr: f64,
    pub weight_decay: f64,
    /// Trials per mini-batch.
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        MlpSpec {
            hidden: vec![32],
            activation: Activation::Relu,
            lr: 1e-3,
            weight_decay: 1e-5,
            batch_size: 8,
            max_epochs: 500,
            patience: 20,
            seed: 0,
        }
    }
}

impl MlpSpec {
    pub fn validate(&self) -> Result<(), DeepError> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(DeepError::Spec("need >= 1 hidden layer, widths >= 1".into()));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) || self.batch_size == 0 {
            return Err(DeepError::Spec("lr > 0, weight_decay >= 0 and batch_size >= 1 required".into()));
        }
        Ok(())
    }
}

/// One trial prepared for training: scaled inputs plus its target.
#[derive(Debug, Clone)]
pub struct Example<'a> {
    pub trial: &'a GaitTrial,
    pub inputs: TrialInputs,
}

pub fn examples<'a>(trials: &[&'a GaitTrial], set: &FeatureSet, scaler: &Scaler) -> Vec<Example<'a>> {
    trials
        .iter()
        .map(|t| Example { trial: t, inputs: scaler.transform(&trial_features(t, set)) })
        .collect()
}

/// Cost of per-(channel, sample) rates laid out channel-major.
pub fn aggregate_cost(rates: &[f64], trial: &GaitTrial) -> Result<f64, DeepError> {
    if trial.grid == 0 || rates.len() % trial.grid != 0 {
        return Err(DeepError::Shape { expected: trial.grid, got: rates.len() });
    }
    let curve = RateCurve { channels: rates.len() / trial.grid, grid: trial.grid, data: rates.to_vec() };
    Ok(cost_from_curve(&curve, trial, &CostOptions::default()))
}

/// Cost of mass-specific rates (W/kg): each rate is multiplied by body mass
/// before aggregation.
pub fn mass_specific_cost(rates: &[f64], trial: &GaitTrial) -> Result<f64, DeepError> {
    let m = trial.subject.mass;
    aggregate_cost(&rates.iter().map(|r| r * m).collect::<Vec<_>>(), trial)
}

pub fn predict_example(mlp: &Mlp, ex: &Example) -> Result<f64, DeepError> {
    mass_specific_cost(&mlp.forward(&ex.inputs.data)?, ex.trial)
}

/// Mean squared cost error over `batch` and its gradient.
pub fn batch_loss_grad(mlp: &Mlp, batch: &[&Example]) -> Result<(f64, Gradients), DeepError> {
    let mut grads = Gradients::zeros_like(mlp);
    let mut loss = 0.0;
    let n = batch.len() as f64;
    for ex in batch {
        let cache = mlp.forward_cached(&ex.inputs.data)?;
        let residual = mass_specific_cost(cache.output(), ex.trial)? - ex.trial.measured_cost;
        loss += residual * residual / n;
        let d = 2.0 * residual / n * cost_scale(ex.trial) * ex.trial.subject.mass;
        mlp.backward(&cache, &vec![d; cache.output().len()], &mut grads);
    }
    Ok((loss, grads))
}

/// Per-channel constant mass-specific rate that reproduces the mean training cost; sets
/// the network's output scale so that initial outputs are of the right order.
fn mean_rate(set: &[Example]) -> f64 {
    let n = set.len() as f64;
    let per_unit: f64 = set.iter().map(|e| mass_specific_cost(&vec![1.0; e.inputs.rows()], e.trial).unwrap_or(0.0)).sum::<f64>() / n;
    let cost: f64 = set.iter().map(|e| e.trial.measured_cost).sum::<f64>() / n;
    let r = cost / per_unit;
    if r.is_finite() && r != 0.0 {
        r.abs()
    } else {
        1.0
    }
}

fn rmse_on(mlp: &Mlp, set: &[Example]) -> Result<f64, DeepError> {
    let mut ss = 0.0;
    for ex in set {
        let r = predict_example(mlp, ex)? - ex.trial.measured_cost;
        ss += r * r;
    }
    Ok((ss / set.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean of the epoch's mini-batch losses, as an RMSE.
    pub train_rmse: f64,
    pub valid_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedMlp {
    pub spec: MlpSpec,
    pub features: FeatureSet,
    pub scaler: Scaler,
    pub mlp: Mlp,
    pub history: Vec<EpochStats>,
    /// Epoch whose weights were kept (0 = initial network).
    pub best_epoch: usize,
}

impl TrainedMlp {
    pub fn predict(&self, trial: &GaitTrial) -> Result<f64, DeepError> {
        let ex = Example { trial, inputs: self.scaler.transform(&trial_features(trial, &self.features)) };
        predict_example(&self.mlp, &ex)
    }

    pub fn best_valid_rmse(&self) -> Option<f64> {
        self.history.iter().find(|h| h.epoch == self.best_epoch).map(|h| h.valid_rmse)
    }
}

/// Trains on `train` with early stopping on `valid` (on `train` when
/// `valid` is empty). The scaler is fitted on `train` only.
pub fn train_inexact(
    spec: &MlpSpec,
    set: &FeatureSet,
    train: &[&GaitTrial],
    valid: &[&GaitTrial],
) -> Result<TrainedMlp, DeepError> {
    spec.validate()?;
    if train.is_empty() {
        return Err(DeepError::Empty("training set"));
    }
    let raw: Vec<TrialInputs> = train.iter().map(|t| trial_features(t, set)).collect();
    let scaler = Scaler::fit(&raw);
    let train_ex = examples(train, set, &scaler);
    let valid_ex = examples(valid, set, &scaler);
    let monitor = if valid_ex.is_empty() { &train_ex } else { &valid_ex };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut mlp = Mlp::new(set.len(), &spec.hidden, spec.activation, &mut rng)?;
    mlp.output_scale = mean_rate(&train_ex);
    let mut adam = Adam::new(mlp.n_params(), spec.lr, spec.weight_decay);
    let mut best = (rmse_on(&mlp, monitor)?, 0usize, mlp.clone());
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_ex.len()).collect();

    for epoch in 1..=spec.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(spec.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_ex[i]).collect();
            let (loss, grads) = batch_loss_grad(&mlp, &batch)?;
            if !loss.is_finite() {
                return Err(DeepError::Diverged { epoch, loss });
            }
            loss_sum += loss * chunk.len() as f64;
            adam.step(&mut mlp, &grads);
        }
        let valid_rmse = rmse_on(&mlp, monitor)?;
        if !valid_rmse.is_finite() {
            return Err(DeepError::Diverged { epoch, loss: valid_rmse });
        }
        history.push(EpochStats { epoch, train_rmse: (loss_sum / train_ex.len() as f64).sqrt(), valid_rmse });
        if valid_rmse < best.0 {
            best = (valid_rmse, epoch, mlp.clone());
        } else if epoch - best.1 >= spec.patience {
            break;
        }
    }
    Ok(TrainedMlp { spec: spec.clone(), features: *set, scaler, mlp: best.2, history, best_epoch: best.1 })
}

/// Seeded per-trial split: the first `round(fraction * n)` of a shuffled
/// copy go to training (at least one).
pub fn split_indices(indices: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut v = indices.to_vec();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = ((fraction * v.len() as f64).round() as usize).clamp(1.min(v.len()), v.len());
    let valid = v.split_off(k);
    (v, valid)
}
