use rand::Rng;

use super::{Param, ParamKind};
use crate::error::{NeuralError, Result};
use crate::tensor::{gemm, Mat};

/// Length-preserving 1-D cross-correlation. Even kernels pad `(k−1)/2` on
/// the left and `k/2` on the right.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    /// `out × (in · kernel)`, index `[o][c · kernel + j]`.
    pub weight: Param,
    pub bias: Param,
    col: Vec<f64>,
    batch: usize,
    len: usize,
}

impl Conv1d {
    pub fn new<R: Rng>(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut R) -> Self {
        let fan_in = in_channels * kernel;
        let fan_out = out_channels * kernel;
        Self {
            in_channels,
            out_channels,
            kernel,
            weight: Param::glorot(ParamKind::Conv, out_channels * fan_in, fan_in, fan_out, rng),
            bias: Param::filled(ParamKind::Conv, out_channels, 0.0),
            col: Vec::new(),
            batch: 0,
            len: 0,
        }
    }

    pub fn pad_left(&self) -> usize {
        (self.kernel - 1) / 2
    }

    fn im2col(&self, x: &[f64], batch: usize, len: usize) -> Vec<f64> {
        let n = batch * len;
        let k = self.kernel;
        let pad = self.pad_left() as isize;
        let mut col = vec![0.0; self.in_channels * k * n];
        for c in 0..self.in_channels {
            for j in 0..k {
                let row = (c * k + j) * n;
                let off = j as isize - pad;
                // valid t: 0 <= t + off < len
                let t0 = (-off).max(0) as usize;
                let t1 = (len as isize - off).clamp(0, len as isize) as usize;
                if t0 >= t1 {
                    continue;
                }
                for b in 0..batch {
                    let base = b * len;
                    let src = c * n + base;
                    let s0 = (t0 as isize + off) as usize;
                    col[row + base + t0..row + base + t1]
                        .copy_from_slice(&x[src + s0..src + s0 + (t1 - t0)]);
                }
            }
        }
        col
    }

    /// `x` is `in × (batch · len)`; returns `out × (batch · len)`.
    pub fn forward(&mut self, x: &[f64], batch: usize, len: usize) -> Result<Vec<f64>> {
        let n = batch * len;
        if x.len() != self.in_channels * n {
            return Err(NeuralError::Shape(format!(
                "conv expects {} input channels × {n} columns, got {} values",
                self.in_channels,
                x.len()
            )));
        }
        let col = self.im2col(x, batch, len);
        let mut y = vec![0.0; self.out_channels * n];
        for (row, b) in y.chunks_exact_mut(n).zip(&self.bias.value) {
            row.iter_mut().for_each(|v| *v = *b);
        }
        let inner = self.in_channels * self.kernel;
        gemm(
            Mat::new(&self.weight.value, self.out_channels, inner),
            Mat::new(&col, inner, n),
            &mut y,
            1.0,
        );
        self.col = col;
        self.batch = batch;
        self.len = len;
        Ok(y)
    }

    /// Accumulates parameter gradients; returns the input gradient when
    /// asked for.
    pub fn backward(&mut self, dy: &[f64], need_dx: bool) -> Option<Vec<f64>> {
        let n = self.batch * self.len;
        let inner = self.in_channels * self.kernel;
        assert_eq!(dy.len(), self.out_channels * n, "conv backward before forward");
        gemm(
            Mat::new(dy, self.out_channels, n),
            Mat::t(&self.col, n, inner),
            &mut self.weight.grad,
            1.0,
        );
        for (g, row) in self.bias.grad.iter_mut().zip(dy.chunks_exact(n)) {
            *g += row.iter().sum::<f64>();
        }
        if !need_dx {
            return None;
        }
        // dcol reuses the column buffer.
        let mut dcol = std::mem::take(&mut self.col);
        gemm(
            Mat::t(&self.weight.value, inner, self.out_channels),
            Mat::new(dy, self.out_channels, n),
            &mut dcol,
            0.0,
        );
        let (batch, len, k) = (self.batch, self.len, self.kernel);
        let pad = self.pad_left() as isize;
        let mut dx = vec![0.0; self.in_channels * n];
        for c in 0..self.in_channels {
            for j in 0..k {
                let row = (c * k + j) * n;
                let off = j as isize - pad;
                let t0 = (-off).max(0) as usize;
                let t1 = (len as isize - off).clamp(0, len as isize) as usize;
                if t0 >= t1 {
                    continue;
                }
                for b in 0..batch {
                    let base = b * len;
                    let dst = c * n + base + (t0 as isize + off) as usize;
                    for (d, s) in dx[dst..dst + (t1 - t0)]
                        .iter_mut()
                        .zip(&dcol[row + base + t0..row + base + t1])
                    {
                        *d += s;
                    }
                }
            }
        }
        Some(dx)
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }

    /// Drop cached activations.
    pub fn clear_cache(&mut self) {
        self.col = Vec::new();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn conv(cin: usize, cout: usize, k: usize, weight: Vec<f64>) -> Conv1d {
        let mut c = Conv1d::new(cin, cout, k, &mut ChaCha8Rng::seed_from_u64(0));
        c.weight.value = weight;
        c
    }

    #[test]
    fn identity_kernel() {
        let mut c = conv(1, 1, 1, vec![1.0]);
        let x = [1.0, -2.0, 3.5, 0.25];
        assert_eq!(c.forward(&x, 1, 4).unwrap(), x.to_vec());
    }

    #[test]
    fn padding_arithmetic() {
        let mut c = conv(1, 1, 3, vec![1.0; 3]);
        let y = c.forward(&[1.0; 8], 1, 8).unwrap();
        assert_eq!(y, vec![2.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 2.0]);
        // Even kernel: one zero on the left, two on the right.
        let mut c = conv(1, 1, 4, vec![1.0; 4]);
        let y = c.forward(&[1.0; 6], 1, 6).unwrap();
        assert_eq!(y, vec![3.0, 4.0, 4.0, 4.0, 3.0, 2.0]);
    }

    #[test]
    fn batches_do_not_leak() {
        let mut c = conv(1, 1, 3, vec![1.0; 3]);
        let y = c.forward(&[1.0, 1.0, 1.0, 5.0, 5.0, 5.0], 2, 3).unwrap();
        assert_eq!(y, vec![2.0, 3.0, 2.0, 10.0, 15.0, 10.0]);
    }

    #[test]
    fn channel_mismatch() {
        let mut c = conv(2, 1, 3, vec![1.0; 6]);
        assert!(c.forward(&[1.0; 5], 1, 5).is_err());
    }

    fn loss(c: &mut Conv1d, x: &[f64], r: &[f64]) -> f64 {
        let y = c.forward(x, 1, 5).unwrap();
        y.iter().zip(r).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn finite_difference_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut c = Conv1d::new(2, 3, 3, &mut rng);
        c.bias.value = vec![0.1, -0.2, 0.3];
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        loss(&mut c, &x, &r);
        let dx = c.backward(&r, true).unwrap();
        let h = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
        for i in 0..c.weight.len() {
            let w = c.weight.value[i];
            c.weight.value[i] = w + h;
            let lp = loss(&mut c, &x, &r);
            c.weight.value[i] = w - h;
            let lm = loss(&mut c, &x, &r);
            c.weight.value[i] = w;
            assert!(rel(c.weight.grad[i], (lp - lm) / (2.0 * h)) <= 1e-6);
        }
        for i in 0..3 {
            let b = c.bias.value[i];
            c.bias.value[i] = b + h;
            let lp = loss(&mut c, &x, &r);
            c.bias.value[i] = b - h;
            let lm = loss(&mut c, &x, &r);
            c.bias.value[i] = b;
            assert!(rel(c.bias.grad[i], (lp - lm) / (2.0 * h)) <= 1e-6);
        }
        let mut xp = x.clone();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let lp = loss(&mut c, &xp, &r);
            xp[i] = x[i] - h;
            let lm = loss(&mut c, &xp, &r);
            xp[i] = x[i];
            assert!(rel(dx[i], (lp - lm) / (2.0 * h)) <= 1e-6);
        }
    }
}
