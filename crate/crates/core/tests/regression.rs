mod common;

use nalgebra::DMatrix;
use proptest::prelude::{prop_assert, proptest, ProptestConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectralweight::regression::{fit_pls, fit_pls_with, loocv, metrics, predict, predict_batch, FeatureScaling};

fn random_data(n: usize, d: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let y = x
        .row_iter()
        .map(|r| r.iter().enumerate().map(|(j, v)| v * (j as f64 * 0.37).cos()).sum::<f64>() + rng.random::<f64>())
        .collect();
    (x, y)
}

#[test]
fn one_feature_one_component_is_simple_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let xs: Vec<f64> = (0..25).map(|_| rng.random::<f64>() * 10.0).collect();
    let y: Vec<f64> = xs.iter().map(|x| 1.5 * x - 4.0 + rng.random::<f64>()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let x = DMatrix::from_column_slice(xs.len(), 1, &xs);
    let model = fit_pls(&x, &y, 1).unwrap();
    for (xi, p) in xs.iter().zip(predict_batch(&model, &x).unwrap()) {
        assert!((p - (my + slope * (xi - mx))).abs() < 1e-10);
    }
}

#[test]
fn predictions_match_independent_simpls() {
    let (x, y) = random_data(50, 40, 21);
    let (x_new, _) = random_data(10, 40, 22);
    let model = fit_pls(&x, &y, 4).unwrap();
    let ours = predict_batch(&model, &x_new).unwrap();
    let oracle = common::simpls_predict(&x, &y, 4, &x_new, true);
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn centered_only_matches_simpls_and_least_squares() {
    let (mut x, y) = random_data(50, 12, 31);
    // Unequal column scales make the two scalings disagree.
    for (j, mut col) in x.column_iter_mut().enumerate() {
        col *= 1.0 + j as f64;
    }
    let (x_new, _) = random_data(10, 12, 32);
    let model = fit_pls_with(&x, &y, 3, FeatureScaling::Center).unwrap();
    assert!(model.x_scale().iter().all(|&s| s == 1.0));
    let ours = predict_batch(&model, &x_new).unwrap();
    for (a, b) in ours.iter().zip(common::simpls_predict(&x, &y, 3, &x_new, false)) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
    let standardized = predict_batch(&fit_pls(&x, &y, 3).unwrap(), &x_new).unwrap();
    assert!(ours.iter().zip(&standardized).any(|(a, b)| (a - b).abs() > 1e-6));
    let full = predict_batch(&fit_pls_with(&x, &y, 12, FeatureScaling::Center).unwrap(), &x).unwrap();
    for (a, b) in full.iter().zip(common::ols_predictions(&x, &y)) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn full_rank_components_reproduce_least_squares() {
    let (x, y) = random_data(40, 7, 5);
    let model = fit_pls(&x, &y, 7).unwrap();
    let ours = predict_batch(&model, &x).unwrap();
    for (a, b) in ours.iter().zip(common::ols_predictions(&x, &y)) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn loocv_on_noiseless_linear_data() {
    let (x, _) = random_data(30, 5, 8);
    let y: Vec<f64> = x.row_iter().map(|r| 10.0 + r[0] - 2.0 * r[1] + r[4]).collect();
    let report = loocv(&x, &y, 5).unwrap();
    assert!(report.metrics.r2 > 0.999);
}

#[test]
fn loocv_on_structureless_target() {
    let (x, _) = random_data(30, 5, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y: Vec<f64> = (0..30).map(|_| 5.0 + 1e-3 * rng.random::<f64>()).collect();
    let report = loocv(&x, &y, 2).unwrap();
    assert!(report.metrics.r2 < 0.1);
}

#[test]
fn metric_identity_examples() {
    let m = metrics(&[10.0, 12.0, 14.0], &[11.0, 12.0, 13.0]).unwrap();
    assert!((m.r2 - 0.75).abs() < 1e-12);
    assert!((m.rmse - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert!((m.cve_percent - 100.0 * m.rmse / 12.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn affine_rescaling_of_a_column_is_invisible(seed in 0u64..500, col in 0usize..6, a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let (x, y) = random_data(20, 6, seed);
        let mut moved = x.clone();
        moved.column_mut(col).iter_mut().for_each(|v| *v = a * *v + b);
        let p = predict_batch(&fit_pls(&x, &y, 3).unwrap(), &x).unwrap();
        let q = predict_batch(&fit_pls(&moved, &y, 3).unwrap(), &moved).unwrap();
        for (u, v) in p.iter().zip(&q) {
            prop_assert!((u - v).abs() <= 1e-8);
        }
    }

    #[test]
    fn loocv_ignores_row_order(seed in 0u64..500, rot in 1usize..15) {
        let (x, y) = random_data(15, 4, seed);
        let order: Vec<usize> = (0..15).map(|i| (i + rot) % 15).collect();
        let xp = DMatrix::from_fn(15, 4, |i, j| x[(order[i], j)]);
        let yp: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let a = loocv(&x, &y, 2).unwrap();
        let b = loocv(&xp, &yp, 2).unwrap();
        for (i, &o) in order.iter().enumerate() {
            prop_assert!((b.predictions[i].predicted - a.predictions[o].predicted).abs() <= 1e-10);
        }
        prop_assert!((a.metrics.r2 - b.metrics.r2).abs() <= 1e-10);
    }

    #[test]
    fn single_prediction_is_deterministic(seed in 0u64..500) {
        let (x, y) = random_data(12, 3, seed);
        let m = fit_pls(&x, &y, 2).unwrap();
        let row: Vec<f64> = x.row(0).iter().copied().collect();
        prop_assert!(predict(&m, &row).unwrap() == predict(&m, &row).unwrap());
    }
}
