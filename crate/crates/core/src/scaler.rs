//! Per-feature standardization fitted on training windows.

use crate::dsp::features::NUM_FEATURES;
use crate::error::{Error, Result};
use crate::segment::Window;

/// Standard deviations below this are treated as constant features.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl FeatureScaler {
    pub fn identity(dim: usize) -> Self {
        Self {
            means: vec![0.0; dim],
            stds: vec![1.0; dim],
        }
    }

    /// Mean and population standard deviation of every feature over all
    /// frames of all windows.
    pub fn fit(windows: &[Window]) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InvalidArgument("cannot fit a scaler on no windows".into()));
        }
        let mut sum = vec![0.0; NUM_FEATURES];
        let mut rows = 0usize;
        for w in windows {
            for frame in w.values.chunks_exact(NUM_FEATURES) {
                for (s, v) in sum.iter_mut().zip(frame) {
                    *s += v;
                }
                rows += 1;
            }
        }
        let means: Vec<f64> = sum.iter().map(|s| s / rows as f64).collect();
        let mut var = vec![0.0; NUM_FEATURES];
        for w in windows {
            for frame in w.values.chunks_exact(NUM_FEATURES) {
                for ((acc, v), m) in var.iter_mut().zip(frame).zip(&means) {
                    *acc += (v - m) * (v - m);
                }
            }
        }
        let stds = var
            .iter()
            .map(|v| (v / rows as f64).sqrt().max(STD_FLOOR))
            .collect::<Vec<_>>();
        if means.iter().chain(&stds).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scaler statistics"));
        }
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Standardize a time-major `len × dim` matrix.
    pub fn transform(&self, values: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let f = i % dim;
                (v - self.means[f]) / self.stds[f]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::State;

    #[test]
    fn standardizes_each_feature() {
        let windows: Vec<Window> = (0..3)
            .map(|k| Window {
                values: (0..2 * NUM_FEATURES)
                    .map(|i| if i % NUM_FEATURES == 5 { 7.0 } else { (i * (k + 1)) as f64 })
                    .collect(),
                state: State::Focused,
                participant_id: 1,
                start_frame: 0,
            })
            .collect();
        let s = FeatureScaler::fit(&windows).unwrap();
        assert_eq!(s.stds[5], STD_FLOOR);
        let mut col0 = Vec::new();
        for w in &windows {
            let z = s.transform(&w.values);
            col0.push(z[0]);
            col0.push(z[NUM_FEATURES]);
        }
        let mean = col0.iter().sum::<f64>() / col0.len() as f64;
        let var = col0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col0.len() as f64;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }
}
