//! Non-neural baselines: Euclidean 1-NN and Rocket with a ridge head.

pub mod nn1;
pub mod ridge;
pub mod rocket;

pub use nn1::{nn1_classify, squared_distance, Neighbor};
pub use ridge::{default_lambda_grid, ridge_fit, ridge_predict, RidgeFit, RidgeModel};
pub use rocket::{fit_rocket, rocket_generate, rocket_transform, RocketKernel, RocketModel};

use crate::error::{Error, Result};

/// Row-major matrix of transform features.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        DenseMatrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }
}
