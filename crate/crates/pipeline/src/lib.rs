//! Experiment harness and command-line pipeline: corpus synthesis, feature
//! extraction, segmentation, training of the five classifiers, evaluation
//! reports and simulated streaming.

pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod models;
pub mod report;
pub mod stages;
pub mod stream;

pub use config::{ModelName, PipelineConfig};
pub use error::{ErrorKind, PipelineError, Result};
pub use experiment::{run_experiment, scored_items, ExperimentData, Prediction, WindowId};
pub use metrics::{compute_metrics, ConfusionMatrix, Metrics};
pub use models::{Scored, SessionWindows, TrainedModel};
pub use report::{emit_report, EvalReport, ReportRow};
pub use stream::{OnlinePredictor, StreamPrediction};
