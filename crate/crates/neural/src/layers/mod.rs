//! Layers with hand-written forward and backward passes.
//!
//! Activations use a channel-major layout: a `C × N` row-major matrix whose
//! `N = batch · len` columns hold `len` consecutive time steps per sample.

mod conv;
mod dense;
mod lstm;
mod norm;

pub use conv::Conv1d;
pub use dense::{gap_backward, gap_forward, relu_backward, softmax, softmax_xent, Dense, XentOutput};
pub use lstm::Lstm;
pub use norm::{BatchNorm, BN_EPSILON, BN_MOMENTUM};

use rand::Rng;

/// Layer family, used to group parameters for gradient checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKind {
    Conv,
    BatchNorm,
    Dense,
    Lstm,
}

impl ParamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamKind::Conv => "conv",
            ParamKind::BatchNorm => "batch_norm",
            ParamKind::Dense => "dense",
            ParamKind::Lstm => "lstm",
        }
    }
}

/// A trainable array and its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub kind: ParamKind,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn new(kind: ParamKind, value: Vec<f64>) -> Self {
        let grad = vec![0.0; value.len()];
        Self { kind, value, grad }
    }

    pub fn filled(kind: ParamKind, len: usize, v: f64) -> Self {
        Self::new(kind, vec![v; len])
    }

    /// Glorot-uniform values in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot<R: Rng>(kind: ParamKind, len: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Self::new(kind, (0..len).map(|_| rng.random_range(-limit..limit)).collect())
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }
}
