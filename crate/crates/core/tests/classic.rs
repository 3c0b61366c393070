use eegdd_core::classic::ridge::{ridge_fit, RidgeModel};
use eegdd_core::classic::rocket::{fit_rocket, rocket_generate, rocket_transform, RocketModel};
use eegdd_core::classic::{nn1_classify, DenseMatrix};
use eegdd_core::{State, Window, NUM_FEATURES};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_window(rng: &mut ChaCha8Rng, len: usize) -> Window {
    Window {
        values: (0..len * NUM_FEATURES).map(|_| rng.random_range(-1.0..1.0)).collect(),
        state: if rng.random_bool(0.4) { State::Distracted } else { State::Focused },
        participant_id: 1,
        start_frame: 0,
    }
}

#[test]
fn nn1_agrees_with_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let train: Vec<Window> = (0..200).map(|_| random_window(&mut rng, 4)).collect();
    for _ in 0..50 {
        let q = random_window(&mut rng, 4);
        let mut best = (f64::INFINITY, 0);
        for (i, w) in train.iter().enumerate() {
            let d: f64 = w.values.iter().zip(&q.values).map(|(a, b)| (a - b).powi(2)).sum();
            if d < best.0 {
                best = (d, i);
            }
        }
        let n = nn1_classify(&train, &q).unwrap();
        assert_eq!(n.index, best.1);
        assert_eq!(n.state, train[best.1].state);
    }
}

#[test]
fn nn1_ties_keep_earliest() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w = random_window(&mut rng, 2);
    let mut twin = w.clone();
    twin.state = if w.state == State::Distracted { State::Focused } else { State::Distracted };
    let n = nn1_classify(&[w.clone(), twin], &w).unwrap();
    assert_eq!((n.index, n.state), (0, w.state));
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

fn labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    y[0] = 1.0;
    y[1] = -1.0;
    y
}

/// ‖(ZᵀZ + λI)w − Zᵀ(y − ȳ)‖ / ‖Zᵀ(y − ȳ)‖ with Z the standardized design.
fn normal_equation_residual(m: &RidgeModel, x: &DenseMatrix, y: &[f64]) -> f64 {
    let z = DMatrix::from_fn(x.rows, x.cols, |i, j| (x.get(i, j) - m.feature_means[j]) / m.feature_stds[j]);
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let yc = DVector::from_iterator(y.len(), y.iter().map(|v| v - ybar));
    let w = DVector::from_column_slice(&m.weights);
    let rhs = z.transpose() * yc;
    let lhs = z.transpose() * &z * &w + m.lambda * &w;
    (lhs - &rhs).norm() / rhs.norm()
}

#[test]
fn ridge_solves_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // Both the primal (rows > cols) and the dual (cols > rows) paths.
    for (rows, cols) in [(80, 12), (30, 120)] {
        let x = random_matrix(&mut rng, rows, cols);
        let y = labels(&mut rng, rows);
        let vx = random_matrix(&mut rng, 20, cols);
        let vy = labels(&mut rng, 20);
        let fit = ridge_fit(&x, &y, &[1e-3, 1e-1, 1.0, 10.0, 1e3], Some((&vx, &vy))).unwrap();
        assert!(normal_equation_residual(&fit.model, &x, &y) <= 1e-8, "{rows}×{cols}");
        let ybar = y.iter().sum::<f64>() / rows as f64;
        assert!((fit.model.intercept - ybar).abs() < 1e-12);
    }
}

#[test]
fn ridge_separates_separable_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 60;
    let mut data = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        data.push(label * rng.random_range(1.0..3.0));
        data.extend((0..4).map(|_| rng.random_range(-1.0..1.0)));
        y.push(label);
    }
    let x = DenseMatrix::new(n, 5, data).unwrap();
    let fit = ridge_fit(&x, &y, &[1e-3, 1e-2, 1e-1], None).unwrap();
    for i in 0..n {
        let s = fit.model.decision(x.row(i)).unwrap();
        assert_eq!(s > 0.0, y[i] > 0.0, "row {i}");
    }
}

#[test]
fn ridge_shrinks_with_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_matrix(&mut rng, 50, 20);
    let y = labels(&mut rng, 50);
    let grid: Vec<f64> = (-3..=3).map(|e| 10f64.powi(e)).collect();
    let fit = ridge_fit(&x, &y, &grid, None).unwrap();
    assert_eq!(fit.path.len(), grid.len());
    for pair in fit.path.windows(2) {
        assert!(pair[0].lambda < pair[1].lambda);
        assert!(pair[1].weight_norm < pair[0].weight_norm);
    }
}

/// Dilated correlation with zero padding, evaluated tap by tap.
fn kernel_oracle(k: &eegdd_core::classic::RocketKernel, series: &[f64], len: usize, dim: usize) -> (f64, f64) {
    let pad = if k.padding { (k.length - 1) * k.dilation / 2 } else { 0 };
    let span = (k.length - 1) * k.dilation;
    let padded_len = len + 2 * pad;
    let mut outputs = Vec::new();
    for start in 0..=padded_len.saturating_sub(span + 1) {
        let mut s = k.bias;
        for (c, &ch) in k.channels.iter().enumerate() {
            for j in 0..k.length {
                let p = start + j * k.dilation;
                if p >= pad && p - pad < len {
                    s += k.weights[c * k.length + j] * series[(p - pad) * dim + ch];
                }
            }
        }
        outputs.push(s);
    }
    let ppv = outputs.iter().filter(|&&v| v > 0.0).count() as f64 / outputs.len() as f64;
    (ppv, outputs.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

#[test]
fn rocket_transform_matches_direct_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (len, dim) = (40, 9);
    let kernels = rocket_generate(60, len, dim, 3);
    let series: Vec<Vec<f64>> = (0..5).map(|_| (0..len * dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let x = rocket_transform(&series, len, dim, &kernels).unwrap();
    for (i, s) in series.iter().enumerate() {
        for (k, kern) in kernels.iter().enumerate() {
            let (ppv, max) = kernel_oracle(kern, s, len, dim);
            assert_eq!(x.get(i, 2 * k), ppv);
            assert!((x.get(i, 2 * k + 1) - max).abs() <= 1e-12 * max.abs().max(1.0));
        }
    }
}

#[test]
fn rocket_kernels_respect_constraints() {
    let kernels = rocket_generate(500, 40, NUM_FEATURES, 1);
    for k in &kernels {
        assert!([7, 9, 11].contains(&k.length));
        assert!(k.channels.windows(2).all(|p| p[0] < p[1]));
        assert!(k.channels.len().is_power_of_two() && k.channels.len() <= 256);
        assert!((-1.0..=1.0).contains(&k.bias));
        assert!((k.length - 1) * k.dilation <= 39);
        for taps in k.weights.chunks_exact(k.length) {
            assert!(taps.iter().sum::<f64>().abs() < 1e-12);
        }
    }
    assert_eq!(kernels, rocket_generate(500, 40, NUM_FEATURES, 1));
    assert_ne!(kernels, rocket_generate(500, 40, NUM_FEATURES, 2));
}

fn labelled_windows(rng: &mut ChaCha8Rng, n: usize) -> Vec<Window> {
    (0..n)
        .map(|i| {
            let state = if i % 3 == 0 { State::Distracted } else { State::Focused };
            // Kernel taps are zero-mean in time, so the class signal must
            // vary along time to be visible.
            let amp = if state == State::Distracted { 1.0 } else { 0.0 };
            let mut w = random_window(rng, 12);
            w.state = state;
            for t in 0..12 {
                let bump = amp * (std::f64::consts::PI * t as f64 / 3.0).sin();
                for f in 0..64 {
                    w.values[t * NUM_FEATURES + f] += bump;
                }
            }
            w
        })
        .collect()
}

#[test]
fn rocket_learns_and_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let train = labelled_windows(&mut rng, 60);
    let val = labelled_windows(&mut rng, 20);
    let test = labelled_windows(&mut rng, 30);
    let (model, fit) = fit_rocket(&train, &val, 200, 4, &[1e-2, 1.0, 100.0]).unwrap();
    assert_eq!(fit.path.len(), 3);
    let pred = model.predict(&test).unwrap();
    let correct = pred.iter().zip(&test).filter(|(p, w)| **p == w.state).count();
    assert!(correct >= 27, "{correct}/30");

    let mut bytes = Vec::new();
    model.write_to(&mut bytes).unwrap();
    let back = RocketModel::read_from(&mut bytes.as_slice()).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.decision_scores(&test).unwrap(), model.decision_scores(&test).unwrap());
    assert!(RocketModel::read_from(&mut &bytes[..bytes.len() - 3]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ppv_is_a_fraction(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kernels = rocket_generate(20, 30, 5, seed);
        let s: Vec<f64> = (0..150).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x = rocket_transform(&[s], 30, 5, &kernels).unwrap();
        for k in 0..20 {
            prop_assert!((0.0..=1.0).contains(&x.get(0, 2 * k)));
        }
    }

    #[test]
    fn nn1_finds_exact_copies(seed in any::<u64>(), pick in 0usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train: Vec<Window> = (0..30).map(|_| random_window(&mut rng, 1)).collect();
        let n = nn1_classify(&train, &train[pick]).unwrap();
        prop_assert_eq!(n.distance, 0.0);
        prop_assert_eq!(n.index, pick);
    }
}
