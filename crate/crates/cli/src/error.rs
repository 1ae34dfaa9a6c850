use scale_core::ScaleError;
use thiserror::Error;

/// Process exit codes.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// A pipeline failure tagged with the stage that raised it.
#[derive(Debug, Error)]
#[error("[{module}] {source}")]
pub struct ExperimentError {
    pub module: &'static str,
    #[source]
    pub source: ScaleError,
}

impl ExperimentError {
    pub fn new(module: &'static str, source: ScaleError) -> Self {
        ExperimentError { module, source }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        ExperimentError::new("config", ScaleError::Config(msg.into()))
    }

    pub fn exit_code(&self) -> i32 {
        match self.source {
            ScaleError::Config(_) | ScaleError::Parameter(_) => EXIT_CONFIG,
            ScaleError::Data(_) | ScaleError::DegeneratePoint { .. } | ScaleError::Io { .. } | ScaleError::Format { .. } => EXIT_DATA,
            ScaleError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

pub(crate) trait InModule<T> {
    fn in_module(self, module: &'static str) -> Result<T, ExperimentError>;
}

impl<T> InModule<T> for Result<T, ScaleError> {
    fn in_module(self, module: &'static str) -> Result<T, ExperimentError> {
        self.map_err(|e| ExperimentError::new(module, e))
    }
}
