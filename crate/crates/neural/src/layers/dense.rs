use rand::Rng;

use super::{Param, ParamKind};
use crate::error::{NeuralError, Result};
use crate::tensor::{gemm, Mat};

/// In-place ReLU gradient given the layer's output.
pub fn relu_backward(dy: &mut [f64], out: &[f64]) {
    for (d, o) in dy.iter_mut().zip(out) {
        if *o <= 0.0 {
            *d = 0.0;
        }
    }
}

/// Mean over time: `C × (batch · len)` → `C × batch`.
pub fn gap_forward(x: &[f64], channels: usize, batch: usize, len: usize) -> Vec<f64> {
    assert_eq!(x.len(), channels * batch * len);
    // Summing in sorted order makes the mean exactly invariant to time
    // permutations.
    let mut buf = vec![0.0; len];
    x.chunks_exact(len)
        .map(|seg| {
            buf.copy_from_slice(seg);
            buf.sort_unstable_by(f64::total_cmp);
            buf.iter().sum::<f64>() / len as f64
        })
        .collect()
}

pub fn gap_backward(dy: &[f64], len: usize) -> Vec<f64> {
    let mut dx = Vec::with_capacity(dy.len() * len);
    for &d in dy {
        dx.extend(std::iter::repeat_n(d / len as f64, len));
    }
    dx
}

/// Fully connected layer on `in × batch` columns.
#[derive(Debug, Clone)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Param,
    pub bias: Param,
    x: Vec<f64>,
}

impl Dense {
    pub fn new<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Self {
            inputs,
            outputs,
            weight: Param::glorot(ParamKind::Dense, inputs * outputs, inputs, outputs, rng),
            bias: Param::filled(ParamKind::Dense, outputs, 0.0),
            x: Vec::new(),
        }
    }

    pub fn forward(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if !x.len().is_multiple_of(self.inputs) {
            return Err(NeuralError::Shape(format!(
                "dense layer expects multiples of {} inputs, got {}",
                self.inputs,
                x.len()
            )));
        }
        let batch = x.len() / self.inputs;
        let mut y = Vec::with_capacity(self.outputs * batch);
        for &b in &self.bias.value {
            y.extend(std::iter::repeat_n(b, batch));
        }
        gemm(
            Mat::new(&self.weight.value, self.outputs, self.inputs),
            Mat::new(x, self.inputs, batch),
            &mut y,
            1.0,
        );
        self.x = x.to_vec();
        Ok(y)
    }

    pub fn backward(&mut self, dy: &[f64]) -> Vec<f64> {
        let batch = self.x.len() / self.inputs;
        assert_eq!(dy.len(), self.outputs * batch, "dense backward before forward");
        gemm(
            Mat::new(dy, self.outputs, batch),
            Mat::t(&self.x, batch, self.inputs),
            &mut self.weight.grad,
            1.0,
        );
        for (g, row) in self.bias.grad.iter_mut().zip(dy.chunks_exact(batch)) {
            *g += row.iter().sum::<f64>();
        }
        let mut dx = vec![0.0; self.inputs * batch];
        gemm(
            Mat::t(&self.weight.value, self.inputs, self.outputs),
            Mat::new(dy, self.outputs, batch),
            &mut dx,
            0.0,
        );
        dx
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn clear_cache(&mut self) {
        self.x = Vec::new();
    }
}

/// Column-wise softmax of a `classes × batch` logit matrix, with max
/// subtraction.
pub fn softmax(logits: &[f64], classes: usize) -> Vec<f64> {
    let batch = logits.len() / classes;
    let mut p = vec![0.0; logits.len()];
    for b in 0..batch {
        let max = (0..classes)
            .map(|k| logits[k * batch + b])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for k in 0..classes {
            let e = (logits[k * batch + b] - max).exp();
            p[k * batch + b] = e;
            sum += e;
        }
        for k in 0..classes {
            p[k * batch + b] /= sum;
        }
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct XentOutput {
    /// `classes × batch`.
    pub probs: Vec<f64>,
    /// Weighted mean over the batch.
    pub loss: f64,
    pub dlogits: Vec<f64>,
}

/// Softmax cross-entropy averaged over the batch, each sample weighted by
/// its class weight.
pub fn softmax_xent(logits: &[f64], classes: usize, targets: &[usize], class_weights: &[f64]) -> XentOutput {
    let batch = targets.len();
    assert_eq!(logits.len(), classes * batch);
    assert_eq!(class_weights.len(), classes);
    let probs = softmax(logits, classes);
    let mut dlogits = probs.clone();
    let mut loss = 0.0;
    for (b, &t) in targets.iter().enumerate() {
        let w = class_weights[t];
        // log p_t from the logits directly stays finite when p_t underflows.
        let max = (0..classes)
            .map(|k| logits[k * batch + b])
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = max
            + (0..classes)
                .map(|k| (logits[k * batch + b] - max).exp())
                .sum::<f64>()
                .ln();
        loss += w * (lse - logits[t * batch + b]);
        for k in 0..classes {
            let onehot = if k == t { 1.0 } else { 0.0 };
            dlogits[k * batch + b] = w * (probs[k * batch + b] - onehot) / batch as f64;
        }
    }
    XentOutput {
        probs,
        loss: loss / batch as f64,
        dlogits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_logits() {
        let out = softmax_xent(&[0.3, 0.3], 2, &[0], &[1.0, 1.0]);
        assert_eq!(out.probs, vec![0.5, 0.5]);
        assert!((out.loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn normalized_and_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let logits: Vec<f64> = (0..3 * 50).map(|_| rng.random_range(-800.0..800.0)).collect();
        let p = softmax(&logits, 3);
        for b in 0..50 {
            let s: f64 = (0..3).map(|k| p[k * 50 + b]).sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
        let targets: Vec<usize> = (0..50).map(|b| b % 3).collect();
        let out = softmax_xent(&logits, 3, &targets, &[1.0; 3]);
        assert!(out.loss.is_finite());
    }

    #[test]
    fn logit_gradient() {
        let logits = [0.4, -1.2, 2.0, 0.1];
        let targets = [1, 0];
        let out = softmax_xent(&logits, 2, &targets, &[1.0, 1.0]);
        for b in 0..2 {
            for k in 0..2 {
                let onehot = if k == targets[b] { 1.0 } else { 0.0 };
                let expected = (out.probs[k * 2 + b] - onehot) / 2.0;
                assert!((out.dlogits[k * 2 + b] - expected).abs() < 1e-15);
            }
        }
        let h = 1e-5;
        for i in 0..4 {
            let mut lp = logits;
            lp[i] += h;
            let mut lm = logits;
            lm[i] -= h;
            let num = (softmax_xent(&lp, 2, &targets, &[1.0, 1.0]).loss
                - softmax_xent(&lm, 2, &targets, &[1.0, 1.0]).loss)
                / (2.0 * h);
            let a = out.dlogits[i];
            assert!((a - num).abs() / a.abs().max(num.abs()) <= 1e-8);
        }
    }

    #[test]
    fn gap_properties() {
        let x = [2.0, 2.0, 2.0, -1.0, -1.0, -1.0];
        assert_eq!(gap_forward(&x, 2, 1, 3), vec![2.0, -1.0]);
        let a = [1.0, 4.0, 2.5, 7.0];
        let b = [7.0, 2.5, 1.0, 4.0];
        assert_eq!(gap_forward(&a, 1, 1, 4), gap_forward(&b, 1, 1, 4));
        assert_eq!(gap_forward(&a, 4, 1, 1), a.to_vec());
        assert_eq!(gap_backward(&[3.0, 6.0], 3), vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn dense_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut d = Dense::new(3, 2, &mut rng);
        d.bias.value = vec![0.2, -0.3];
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = [0.5, -1.0, 2.0, 0.3];
        let loss = |d: &mut Dense, x: &[f64]| -> f64 {
            d.forward(x).unwrap().iter().zip(&r).map(|(a, b)| a * b).sum()
        };
        loss(&mut d, &x);
        let dx = d.backward(&r);
        let h = 1e-5;
        let mut xp = x.clone();
        for i in 0..6 {
            xp[i] = x[i] + h;
            let lp = loss(&mut d, &xp);
            xp[i] = x[i] - h;
            let lm = loss(&mut d, &xp);
            xp[i] = x[i];
            assert!((dx[i] - (lp - lm) / (2.0 * h)).abs() < 1e-8);
        }
        for i in 0..6 {
            let w = d.weight.value[i];
            d.weight.value[i] = w + h;
            let lp = loss(&mut d, &x);
            d.weight.value[i] = w - h;
            let lm = loss(&mut d, &x);
            d.weight.value[i] = w;
            assert!((d.weight.grad[i] - (lp - lm) / (2.0 * h)).abs() < 1e-8);
        }
    }

}
