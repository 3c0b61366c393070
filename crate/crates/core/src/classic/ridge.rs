//! Ridge classifier on standardized features with a regularization grid.

use nalgebra::{DMatrix, DVector};

use crate::classic::DenseMatrix;
use crate::data::State;
use crate::error::{Error, Result};
use crate::scaler::STD_FLOOR;

/// `10^-3 … 10^3`.
pub fn default_lambda_grid() -> Vec<f64> {
    (-3..=3).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

impl RidgeModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "ridge model expects {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ridge input"));
        }
        let mut score = self.intercept;
        for (((v, m), s), w) in x
            .iter()
            .zip(&self.feature_means)
            .zip(&self.feature_stds)
            .zip(&self.weights)
        {
            score += w * (v - m) / s;
        }
        Ok(score)
    }
}

/// Sign rule with DISTRACTED as the positive class; a zero score counts as
/// DISTRACTED.
pub fn state_from_score(score: f64) -> State {
    if score >= 0.0 {
        State::Distracted
    } else {
        State::Focused
    }
}

pub fn ridge_predict(model: &RidgeModel, x: &[f64]) -> Result<State> {
    model.decision(x).map(state_from_score)
}

/// Validation outcome of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaScore {
    pub lambda: f64,
    pub error_rate: f64,
    pub squared_loss: f64,
    pub weight_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub model: RidgeModel,
    pub path: Vec<LambdaScore>,
}

struct Standardized {
    means: Vec<f64>,
    stds: Vec<f64>,
    x: DMatrix<f64>,
}

fn standardize(x: &DenseMatrix) -> Result<Standardized> {
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge features"));
    }
    let n = x.rows as f64;
    let mut means = vec![0.0; x.cols];
    for row in x.data.chunks_exact(x.cols) {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; x.cols];
    for row in x.data.chunks_exact(x.cols) {
        for ((acc, v), m) in var.iter_mut().zip(row).zip(&means) {
            *acc += (v - m) * (v - m);
        }
    }
    let stds: Vec<f64> = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
    let xs = DMatrix::from_fn(x.rows, x.cols, |i, j| (x.get(i, j) - means[j]) / stds[j]);
    Ok(Standardized { means, stds, x: xs })
}

/// Ridge solutions for every λ on the grid, via Cholesky of either the
/// primal `XᵀX + λI` or, when features outnumber rows, the dual
/// `XXᵀ + λI`.
struct RidgeSolver {
    xs: DMatrix<f64>,
    gram: DMatrix<f64>,
    y_centered: DVector<f64>,
    xty: DVector<f64>,
    dual: bool,
}

impl RidgeSolver {
    fn new(xs: DMatrix<f64>, y: &[f64]) -> Self {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let y_centered = DVector::from_iterator(y.len(), y.iter().map(|v| v - mean));
        let dual = xs.ncols() > xs.nrows();
        let gram = if dual { &xs * xs.transpose() } else { xs.transpose() * &xs };
        let xty = xs.transpose() * &y_centered;
        Self {
            xs,
            gram,
            y_centered,
            xty,
            dual,
        }
    }

    fn solve(&self, lambda: f64) -> Result<Vec<f64>> {
        let mut a = self.gram.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += lambda;
        }
        let chol = a.cholesky().ok_or_else(|| {
            Error::InvalidArgument(format!("ridge system not positive definite at λ={lambda}"))
        })?;
        let w = if self.dual {
            let alpha = chol.solve(&self.y_centered);
            self.xs.transpose() * alpha
        } else {
            chol.solve(&self.xty)
        };
        Ok(w.iter().copied().collect())
    }
}

fn labels_ok(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidArgument("ridge labels must be ±1".into()));
    }
    let positives = y.iter().filter(|&&v| v > 0.0).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

fn fit_fixed(x: &DenseMatrix, y: &[f64], lambdas: &[f64]) -> Result<Vec<RidgeModel>> {
    let st = standardize(x)?;
    let intercept = y.iter().sum::<f64>() / y.len() as f64;
    let solver = RidgeSolver::new(st.x, y);
    lambdas
        .iter()
        .map(|&lambda| {
            Ok(RidgeModel {
                feature_means: st.means.clone(),
                feature_stds: st.stds.clone(),
                weights: solver.solve(lambda)?,
                intercept,
                lambda,
            })
        })
        .collect()
}

fn score_on(model: &RidgeModel, x: &DenseMatrix, y: &[f64]) -> Result<(usize, f64)> {
    let mut errors = 0;
    let mut loss = 0.0;
    for (i, &target) in y.iter().enumerate() {
        let s = model.decision(x.row(i))?;
        if state_from_score(s).sign() != target {
            errors += 1;
        }
        loss += (s - target) * (s - target);
    }
    Ok((errors, loss))
}

/// Fit on `(x, y)` with `y ∈ {−1, +1}` (DISTRACTED = +1), choosing λ by
/// validation error when a validation set is given and by 5-fold
/// cross-validation otherwise. Ties on error go to the lower squared loss.
pub fn ridge_fit(
    x: &DenseMatrix,
    y: &[f64],
    lambdas: &[f64],
    validation: Option<(&DenseMatrix, &[f64])>,
) -> Result<RidgeFit> {
    if x.rows != y.len() {
        return Err(Error::ShapeMismatch(format!("{} rows for {} labels", x.rows, y.len())));
    }
    if x.rows < 2 {
        return Err(Error::InvalidArgument("ridge needs at least two rows".into()));
    }
    if lambdas.is_empty() || lambdas.iter().any(|&l| l.is_nan() || l <= 0.0) {
        return Err(Error::InvalidArgument("λ grid must be non-empty and positive".into()));
    }
    labels_ok(y)?;

    let models = fit_fixed(x, y, lambdas)?;
    let mut path: Vec<LambdaScore> = Vec::with_capacity(lambdas.len());
    match validation {
        Some((vx, vy)) if !vy.is_empty() => {
            if vx.cols != x.cols || vx.rows != vy.len() {
                return Err(Error::ShapeMismatch("validation set shape".into()));
            }
            for m in &models {
                let (errors, loss) = score_on(m, vx, vy)?;
                path.push(LambdaScore {
                    lambda: m.lambda,
                    error_rate: errors as f64 / vy.len() as f64,
                    squared_loss: loss / vy.len() as f64,
                    weight_norm: norm(&m.weights),
                });
            }
        }
        _ => {
            let folds = x.rows.min(5);
            let mut errors = vec![0usize; lambdas.len()];
            let mut loss = vec![0.0; lambdas.len()];
            for fold in 0..folds {
                let (train_idx, test_idx): (Vec<usize>, Vec<usize>) =
                    (0..x.rows).partition(|i| i % folds != fold);
                let ty: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
                if labels_ok(&ty).is_err() {
                    continue;
                }
                let fold_models = fit_fixed(&x.select_rows(&train_idx), &ty, lambdas)?;
                let hx = x.select_rows(&test_idx);
                let hy: Vec<f64> = test_idx.iter().map(|&i| y[i]).collect();
                for (k, m) in fold_models.iter().enumerate() {
                    let (e, l) = score_on(m, &hx, &hy)?;
                    errors[k] += e;
                    loss[k] += l;
                }
            }
            for (k, m) in models.iter().enumerate() {
                path.push(LambdaScore {
                    lambda: m.lambda,
                    error_rate: errors[k] as f64 / x.rows as f64,
                    squared_loss: loss[k] / x.rows as f64,
                    weight_norm: norm(&m.weights),
                });
            }
        }
    }
    let best = (0..path.len())
        .min_by(|&a, &b| {
            path[a]
                .error_rate
                .total_cmp(&path[b].error_rate)
                .then(path[a].squared_loss.total_cmp(&path[b].squared_loss))
        })
        .expect("non-empty grid");
    Ok(RidgeFit {
        model: models[best].clone(),
        path,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (DenseMatrix, Vec<f64>) {
        let mut data = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            let a = (i as f64 * 0.7).sin();
            data.extend([label * 2.0 + 0.1 * a, a, (i as f64).cos()]);
            y.push(label);
        }
        (DenseMatrix::new(40, 3, data).unwrap(), y)
    }

    #[test]
    fn sign_rule() {
        assert_eq!(state_from_score(0.3), State::Distracted);
        assert_eq!(state_from_score(-0.3), State::Focused);
        assert_eq!(state_from_score(0.0), State::Distracted);
    }

    #[test]
    fn fits_separable_data() {
        let (x, y) = separable();
        let fit = ridge_fit(&x, &y, &default_lambda_grid(), None).unwrap();
        for (i, &t) in y.iter().enumerate() {
            assert_eq!(ridge_predict(&fit.model, x.row(i)).unwrap().sign(), t);
        }
        assert_eq!(fit.path.len(), 7);
    }

    #[test]
    fn dual_matches_primal() {
        // 3 rows < 5 columns exercises the dual system.
        let x = DenseMatrix::new(
            3,
            5,
            vec![1.0, 2.0, 0.5, -1.0, 3.0, 0.0, 1.0, 2.5, 1.0, -2.0, 2.0, -1.0, 1.0, 0.0, 1.0],
        )
        .unwrap();
        let y = [1.0, -1.0, 1.0];
        let model = &fit_fixed(&x, &y, &[0.5]).unwrap()[0];
        let st = standardize(&x).unwrap();
        let w = DVector::from_vec(model.weights.clone());
        let yc = DVector::from_iterator(3, y.iter().map(|v| v - 1.0 / 3.0));
        let lhs = st.x.transpose() * &st.x * &w + &w * 0.5;
        let rhs = st.x.transpose() * yc;
        assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let (x, _) = separable();
        assert!(matches!(
            ridge_fit(&x, &[1.0; 40], &[1.0], None),
            Err(Error::SingleClass)
        ));
        let mut bad = x.clone();
        bad.data[3] = f64::NAN;
        let (_, y) = separable();
        assert!(ridge_fit(&bad, &y, &[1.0], None).is_err());
        let model = ridge_fit(&x, &y, &[1.0], None).unwrap().model;
        assert!(ridge_predict(&model, &[0.0; 2]).is_err());
    }
}
