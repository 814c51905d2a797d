use metacost::metrics::{cmc, mean_cmc, rmcorr, rmse, rmse_slices, PairedCosts, WaveformSet};
use proptest::prelude::*;

fn paired(subjects: &[usize], calc: &[f64], meas: &[f64]) -> PairedCosts {
    PairedCosts::new(subjects.iter().map(|s| format!("s{s}")).collect(), calc.to_vec(), meas.to_vec()).unwrap()
}

#[test]
fn rmse_of_three_four() {
    assert!((rmse_slices(&[3.0, 4.0], &[0.0, 0.0]) - 12.5f64.sqrt()).abs() < 1e-12);
    let pc = paired(&[0, 1], &[3.0, 4.0], &[0.0, 0.0]);
    assert!((rmse(&pc).unwrap() - 3.5355).abs() < 1e-4);
}

proptest! {
    #[test]
    fn rmcorr_ignores_subject_offsets(
        data in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 12),
        offsets in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 4),
    ) {
        let subjects: Vec<usize> = (0..12).map(|i| i / 3).collect();
        let x: Vec<f64> = data.iter().map(|d| d.0).collect();
        let y: Vec<f64> = data.iter().zip(&subjects).map(|(d, _)| d.0 * 0.7 + d.1).collect();
        let base = rmcorr(&paired(&subjects, &x, &y)).unwrap();
        let xs: Vec<f64> = x.iter().zip(&subjects).map(|(v, &s)| v + offsets[s].0).collect();
        let ys: Vec<f64> = y.iter().zip(&subjects).map(|(v, &s)| v + offsets[s].1).collect();
        let moved = rmcorr(&paired(&subjects, &xs, &ys)).unwrap();
        prop_assert!((base.r - moved.r).abs() < 1e-12, "{} vs {}", base.r, moved.r);
        prop_assert_eq!(base.df, moved.df);
    }

    #[test]
    fn cmc_is_finite_and_bounded(rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 20), 2..5)) {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        if let Ok(c) = cmc(&WaveformSet::new(&refs).unwrap()) {
            prop_assert!(c.value.is_finite());
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c.value));
        }
    }
}

#[test]
fn cmc_of_identical_waveforms_is_one() {
    let w: Vec<f64> = (0..100).map(|k| (k as f64 * 0.0628).sin() * 3.0 + 1.0).collect();
    let ws = WaveformSet::new(&[&w, &w, &w]).unwrap();
    let c = cmc(&ws).unwrap();
    assert!((c.value - 1.0).abs() < 1e-12);
    assert!(!c.clamped);
}

#[test]
fn cmc_clamps_to_zero_for_unrelated_waveforms() {
    let a: Vec<f64> = (0..50).map(|k| (k as f64 * 0.4).sin()).collect();
    let b: Vec<f64> = a.iter().map(|v| -v + 0.01).collect();
    let c = cmc(&WaveformSet::new(&[&a, &b]).unwrap()).unwrap();
    assert_eq!(c.value, 0.0);
    assert!(c.clamped);
    assert!(!c.value.is_nan());
}

#[test]
fn mean_cmc_skips_nothing_valid() {
    let a = [0.0, 1.0, 2.0, 1.0];
    let ws = WaveformSet::new(&[&a, &a]).unwrap();
    assert!((mean_cmc([&ws, &ws]).unwrap() - 1.0).abs() < 1e-12);
}
