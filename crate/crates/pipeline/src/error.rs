use std::fmt;

use eegdd_neural::NeuralError;

/// Failure class, which fixes the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Divergence,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Divergence => 4,
        }
    }
}

/// A stage-tagged pipeline failure.
#[derive(Debug)]
pub struct PipelineError {
    pub kind: ErrorKind,
    pub stage: String,
    pub message: String,
}

pub type Result<T> = std::result::Result<T, PipelineError>;

impl PipelineError {
    pub fn new(kind: ErrorKind, stage: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind,
            stage: stage.into(),
            message: message.into(),
        }
    }

    pub fn config(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, stage, message)
    }

    pub fn data(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Data, stage, message)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    pub fn from_core(stage: impl Into<String>, e: eegdd_core::Error) -> Self {
        let kind = if e.is_config() {
            ErrorKind::Config
        } else {
            ErrorKind::Data
        };
        Self::new(kind, stage, e.to_string())
    }

    pub fn from_neural(stage: impl Into<String>, e: NeuralError) -> Self {
        let kind = match &e {
            NeuralError::Divergence { .. } => ErrorKind::Divergence,
            NeuralError::Config(_) => ErrorKind::Config,
            NeuralError::Core(inner) if inner.is_config() => ErrorKind::Config,
            _ => ErrorKind::Data,
        };
        Self::new(kind, stage, e.to_string())
    }

    pub fn io(stage: impl Into<String>, path: &std::path::Path, e: std::io::Error) -> Self {
        Self::data(stage, format!("{}: {e}", path.display()))
    }

    /// Prefix the stage with more context, e.g. a model and repetition.
    pub fn within(mut self, context: impl fmt::Display) -> Self {
        self.stage = format!("{}/{context}", self.stage);
        self
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}
