use super::{Param, ParamKind};
use crate::error::{NeuralError, Result};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-channel batch normalization over all `batch · len` columns.
///
/// Running statistics start from the first training batch rather than
/// from (0, 1); inference before that is an error.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub channels: usize,
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub tracked: bool,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            gamma: Param::filled(ParamKind::BatchNorm, channels, 1.0),
            beta: Param::filled(ParamKind::BatchNorm, channels, 0.0),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            tracked: false,
            xhat: Vec::new(),
            inv_std: Vec::new(),
        }
    }

    pub fn forward(&mut self, x: &[f64], train: bool) -> Result<Vec<f64>> {
        if !x.len().is_multiple_of(self.channels) {
            return Err(NeuralError::Shape(format!(
                "batch norm over {} channels got {} values",
                self.channels,
                x.len()
            )));
        }
        let n = x.len() / self.channels;
        let mut y = vec![0.0; x.len()];
        if !train {
            if !self.tracked {
                return Err(NeuralError::Untrained);
            }
            for c in 0..self.channels {
                let inv = 1.0 / (self.running_var[c] + BN_EPSILON).sqrt();
                let (g, b, m) = (self.gamma.value[c], self.beta.value[c], self.running_mean[c]);
                for (o, v) in y[c * n..(c + 1) * n].iter_mut().zip(&x[c * n..(c + 1) * n]) {
                    *o = g * (v - m) * inv + b;
                }
            }
            return Ok(y);
        }
        if n < 2 {
            return Err(NeuralError::Shape(
                "batch norm training needs at least two values per channel".into(),
            ));
        }
        self.xhat = vec![0.0; x.len()];
        self.inv_std = vec![0.0; self.channels];
        for c in 0..self.channels {
            let row = &x[c * n..(c + 1) * n];
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + BN_EPSILON).sqrt();
            self.inv_std[c] = inv;
            let (g, b) = (self.gamma.value[c], self.beta.value[c]);
            let xh = &mut self.xhat[c * n..(c + 1) * n];
            for ((h, o), v) in xh.iter_mut().zip(&mut y[c * n..(c + 1) * n]).zip(row) {
                *h = (v - mean) * inv;
                *o = g * *h + b;
            }
            let unbiased = var * n as f64 / (n - 1) as f64;
            if self.tracked {
                self.running_mean[c] = BN_MOMENTUM * self.running_mean[c] + (1.0 - BN_MOMENTUM) * mean;
                self.running_var[c] = BN_MOMENTUM * self.running_var[c] + (1.0 - BN_MOMENTUM) * unbiased;
            } else {
                self.running_mean[c] = mean;
                self.running_var[c] = unbiased;
            }
        }
        self.tracked = true;
        Ok(y)
    }

    /// Full normalization gradient for the last training-mode forward.
    pub fn backward(&mut self, dy: &[f64]) -> Vec<f64> {
        assert_eq!(dy.len(), self.xhat.len(), "batch norm backward before forward");
        let n = dy.len() / self.channels;
        let mut dx = vec![0.0; dy.len()];
        for c in 0..self.channels {
            let d = &dy[c * n..(c + 1) * n];
            let xh = &self.xhat[c * n..(c + 1) * n];
            let sum_dy: f64 = d.iter().sum();
            let sum_dy_xh: f64 = d.iter().zip(xh).map(|(a, b)| a * b).sum();
            self.gamma.grad[c] += sum_dy_xh;
            self.beta.grad[c] += sum_dy;
            let k = self.gamma.value[c] * self.inv_std[c] / n as f64;
            for ((o, g), h) in dx[c * n..(c + 1) * n].iter_mut().zip(d).zip(xh) {
                *o = k * (n as f64 * g - sum_dy - h * sum_dy_xh);
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.gamma, &mut self.beta]
    }

    pub fn clear_cache(&mut self) {
        self.xhat = Vec::new();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-3.0..5.0)).collect()
    }

    #[test]
    fn train_mode_standardizes() {
        let mut bn = BatchNorm::new(3);
        // Output variance is var / (var + ε); inputs spread wide enough
        // keep that within 1e-6 of one.
        let x: Vec<f64> = random(3 * 20, 1).iter().map(|v| v * 10.0).collect();
        let y = bn.forward(&x, true).unwrap();
        for row in y.chunks_exact(20) {
            let mean = row.iter().sum::<f64>() / 20.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 20.0;
            assert!(mean.abs() <= 1e-9);
            assert!((var - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn infer_mode() {
        let mut bn = BatchNorm::new(2);
        assert!(matches!(bn.forward(&[0.0; 4], false), Err(NeuralError::Untrained)));
        bn.forward(&random(2 * 10, 2), true).unwrap();
        bn.beta.value = vec![0.7, -0.4];
        let m = bn.running_mean.clone();
        let x = vec![m[0], m[0], m[0], m[1], m[1], m[1]];
        let y = bn.forward(&x, false).unwrap();
        assert_eq!(y, vec![0.7, 0.7, 0.7, -0.4, -0.4, -0.4]);
    }

    #[test]
    fn running_stats_update() {
        let mut bn = BatchNorm::new(1);
        bn.forward(&[0.0, 2.0], true).unwrap();
        assert_eq!(bn.running_mean, vec![1.0]);
        assert_eq!(bn.running_var, vec![2.0]);
        bn.forward(&[4.0, 6.0], true).unwrap();
        assert!((bn.running_mean[0] - 1.4).abs() < 1e-12);
        assert!((bn.running_var[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_gradients() {
        let mut bn = BatchNorm::new(2);
        bn.gamma.value = vec![1.3, 0.6];
        bn.beta.value = vec![0.2, -0.1];
        let x = random(2 * 6, 3);
        let r = random(2 * 6, 4);
        let loss = |bn: &mut BatchNorm, x: &[f64]| -> f64 {
            let y = bn.forward(x, true).unwrap();
            y.iter().zip(&r).map(|(a, b)| a * b * a).sum()
        };
        let y = bn.forward(&x, true).unwrap();
        let dy: Vec<f64> = y.iter().zip(&r).map(|(a, b)| 2.0 * a * b).collect();
        let dx = bn.backward(&dy);
        let h = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
        let mut xp = x.clone();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let lp = loss(&mut bn, &xp);
            xp[i] = x[i] - h;
            let lm = loss(&mut bn, &xp);
            xp[i] = x[i];
            assert!(rel(dx[i], (lp - lm) / (2.0 * h)) <= 1e-5, "dx[{i}]");
        }
        let (gg, gb) = (bn.gamma.grad.clone(), bn.beta.grad.clone());
        for c in 0..2 {
            let g = bn.gamma.value[c];
            bn.gamma.value[c] = g + h;
            let lp = loss(&mut bn, &x);
            bn.gamma.value[c] = g - h;
            let lm = loss(&mut bn, &x);
            bn.gamma.value[c] = g;
            assert!(rel(gg[c], (lp - lm) / (2.0 * h)) <= 1e-5);
            let b = bn.beta.value[c];
            bn.beta.value[c] = b + h;
            let lp = loss(&mut bn, &x);
            bn.beta.value[c] = b - h;
            let lm = loss(&mut bn, &x);
            bn.beta.value[c] = b;
            assert!(rel(gb[c], (lp - lm) / (2.0 * h)) <= 1e-5);
        }
    }
}
