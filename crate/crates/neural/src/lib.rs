//! Small float64 neural-network engine and the FCN, ResNet and FCN-LSTM
//! window classifiers built on it.
//!
//! There is no autograd: every layer carries its own backward pass, and
//! each architecture chains them explicitly. Matrix products go through
//! `matrixmultiply`; everything runs on one thread so a seed fixes the
//! trained weights bit for bit.

pub mod error;
pub mod gradcheck;
mod io;
pub mod layers;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{NeuralError, Result};
pub use gradcheck::{grad_check, GradCheckReport};
pub use model::{build_model, sequence_samples, window_samples, ModelKind, ModelSpec, NeuralModel, Sample};
pub use tensor::Tensor;
pub use train::{evaluate, train_model, EpochRecord, Evaluation, TrainConfig, TrainingHistory};
