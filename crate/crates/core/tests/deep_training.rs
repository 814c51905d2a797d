use metacost::data::{synth_dataset, DatasetSpec};
use metacost::deep::{
    batch_loss_grad, enumerate_feature_sets, examples, mass_specific_cost, trial_features, train_inexact, Activation, FeatureSet,
    FeatureSpace, Layer, Mlp, MlpSpec, Scaler, SweepReport, SweepRow, TrainedMlp, TrialInputs,
};
use metacost::{Dataset, GaitTrial};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small() -> Dataset {
    let spec = DatasetSpec { grid: 20, ..DatasetSpec::learnable(30.0) };
    synth_dataset(&DatasetSpec { subjects: 4, ..spec }, 3).unwrap()
}

fn refs(ds: &Dataset) -> Vec<&GaitTrial> {
    ds.trials.iter().collect()
}

fn quick_spec(epochs: usize) -> MlpSpec {
    MlpSpec { hidden: vec![16], lr: 3e-2, weight_decay: 0.0, batch_size: 4, max_epochs: epochs, patience: epochs.max(1), ..MlpSpec::default() }
}

#[test]
fn zero_epochs_returns_the_initial_network() {
    let ds = small();
    let set = FeatureSet::from_names(FeatureSpace::Muscle, &["act", "vce"]).unwrap();
    let t = train_inexact(&quick_spec(0), &set, &refs(&ds), &[]).unwrap();
    assert_eq!(t.best_epoch, 0);
    assert!(t.history.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(quick_spec(0).seed);
    let mut init = Mlp::new(2, &[16], Activation::Relu, &mut rng).unwrap();
    init.output_scale = t.mlp.output_scale;
    assert_eq!(t.mlp, init);
}

#[test]
fn training_is_deterministic() {
    let ds = small();
    let set = FeatureSet::from_names(FeatureSpace::Muscle, &["act"]).unwrap();
    let a = train_inexact(&quick_spec(5), &set, &refs(&ds), &[]).unwrap();
    let b = train_inexact(&quick_spec(5), &set, &refs(&ds), &[]).unwrap();
    assert_eq!(a, b);
}

/// Targets whose cost is a linear function of activation alone.
fn linear_activation_dataset() -> Dataset {
    let mut ds = synth_dataset(&DatasetSpec { subjects: 6, ..DatasetSpec::learnable(30.0) }, 8).unwrap();
    for t in &mut ds.trials {
        let rates: Vec<f64> = t.muscles.iter().flat_map(|m| m.act.iter().map(|a| 1.0 + 40.0 * a)).collect();
        t.measured_cost = mass_specific_cost(&rates, t).unwrap();
    }
    ds
}

#[test]
fn linear_single_feature_target_is_learned() {
    let ds = linear_activation_dataset();
    let set = FeatureSet::from_names(FeatureSpace::Muscle, &["act"]).unwrap();
    let train = refs(&ds);
    let trained: TrainedMlp = train_inexact(&quick_spec(200), &set, &train, &[]).unwrap();
    let y: Vec<f64> = ds.trials.iter().map(|t| t.measured_cost).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let ss: f64 = ds.trials.iter().map(|t| (trained.predict(t).unwrap() - t.measured_cost).powi(2)).sum();
    let rmse = (ss / y.len() as f64).sqrt();
    assert!(rmse < 0.05 * sd, "train RMSE {rmse} vs target sd {sd}");
}

#[test]
fn channel_order_does_not_change_predictions() {
    let ds = small();
    let set = FeatureSet::from_names(FeatureSpace::Muscle, &["act", "vce", "f_max"]).unwrap();
    let t = train_inexact(&quick_spec(3), &set, &refs(&ds), &[]).unwrap();
    let trial = ds.trials[0].clone();
    let mut permuted = trial.clone();
    permuted.muscles.reverse();
    permuted.muscles.swap(0, 1);
    let (a, b) = (t.predict(&trial).unwrap(), t.predict(&permuted).unwrap());
    assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} vs {b}");
}

fn randomised(mut m: Mlp, rng: &mut impl Rng) -> Mlp {
    let p: Vec<f64> = (0..m.n_params()).map(|_| rng.gen_range(-0.8..0.8)).collect();
    m.set_params_flat(&p);
    m
}

#[test]
fn gradients_match_central_differences() {
    let ds = small();
    let set = FeatureSet::from_names(FeatureSpace::Muscle, &["lce", "vce", "act"]).unwrap();
    let pair = [&ds.trials[0], &ds.trials[5]];
    let scaler = Scaler::fit(pair.iter().map(|t| trial_features(t, &set)).collect::<Vec<_>>().iter());
    let ex = examples(&pair, &set, &scaler);
    let batch: Vec<_> = ex.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut mlp = randomised(Mlp::new(3, &[6, 5], Activation::LeakyRelu, &mut rng).unwrap(), &mut rng);
    mlp.output_scale = 2.0;
    let (_, g) = batch_loss_grad(&mlp, &batch).unwrap();
    let analytic = g.flat();
    let p0 = mlp.params_flat();
    let h = 1e-5;
    for i in 0..p0.len() {
        let mut p = p0.clone();
        p[i] = p0[i] + h;
        mlp.set_params_flat(&p);
        let up = batch_loss_grad(&mlp, &batch).unwrap().0;
        p[i] = p0[i] - h;
        mlp.set_params_flat(&p);
        let down = batch_loss_grad(&mlp, &batch).unwrap().0;
        let numeric = (up - down) / (2.0 * h);
        let rel = (numeric - analytic[i]).abs() / numeric.abs().max(analytic[i].abs()).max(1e-8);
        assert!(rel < 1e-4, "param {i}: analytic {} numeric {numeric}", analytic[i]);
    }
}

#[test]
fn identity_like_network_passes_a_feature_through() {
    let m = Mlp {
        activation: Activation::Relu,
        layers: vec![
            Layer { inputs: 2, outputs: 2, w: vec![1.0, 0.0, 0.0, 1.0], b: vec![0.0, 0.0] },
            Layer { inputs: 2, outputs: 1, w: vec![0.0, 1.0], b: vec![0.0] },
        ],
        output_scale: 3.0,
    };
    assert_eq!(m.forward(&[0.2, 0.5, 0.9, 0.25]).unwrap(), vec![1.5, 0.75]);
}

#[test]
fn pair_heatmaps_have_one_cell_per_pair() {
    for (space, pairs) in [(FeatureSpace::Joint, 6), (FeatureSpace::Muscle, 28)] {
        let rows = enumerate_feature_sets(space)
            .into_iter()
            .map(|s| SweepRow { space, mask: s.mask, features: s.label(), rmse: s.mask as f64, spec: MlpSpec::default() })
            .collect();
        let grid = SweepReport { space, rows }.pair_heatmap();
        let n = space.n_features();
        let off: usize = (0..n).map(|i| (i + 1..n).filter(|&j| grid[i][j].is_some()).count()).sum();
        let lower: usize = (0..n).map(|i| (0..i).filter(|&j| grid[i][j].is_some()).count()).sum();
        assert_eq!(off, pairs);
        assert_eq!(lower, 0);
        assert!((0..n).all(|i| grid[i][i] == Some((1u32 << i) as f64)));
    }
}

fn inputs(n_features: usize, rows: &[Vec<f64>]) -> TrialInputs {
    TrialInputs { channels: 1, grid: rows.len(), n_features, data: rows.concat() }
}

proptest! {
    #[test]
    fn scaler_maps_training_data_into_unit_box_and_inverts(
        rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..30),
        extra in prop::collection::vec(-1e4f64..1e4, 3),
    ) {
        let train = inputs(3, &rows);
        let s = Scaler::fit([&train]);
        let t = s.transform(&train);
        prop_assert!(t.data.iter().all(|v| (0.0..=1.0).contains(v)));
        let back = s.inverse(&t);
        for (a, b) in back.data.iter().zip(&train.data) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        // unseen data are not clipped
        let test = inputs(3, &[extra.clone()]);
        let tt = s.transform(&test);
        for (j, v) in tt.data.iter().enumerate() {
            let span = if s.max[j] > s.min[j] { s.max[j] - s.min[j] } else { 1.0 };
            prop_assert!((v - (extra[j] - s.min[j]) / span).abs() < 1e-12);
        }
    }
}
