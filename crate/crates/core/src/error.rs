use thiserror::Error;

/// Errors raised by the pipeline stages.
#[derive(Debug, Error)]
pub enum ScaleError {
    /// An argument violated an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data contained non-finite or otherwise unusable values.
    #[error("data error: {0}")]
    Data(String),

    /// A row collapsed to (near) zero norm and cannot be placed on the sphere.
    #[error("degenerate point at row {row}: norm {norm:e} is below 1e-12")]
    DegeneratePoint { row: usize, norm: f64 },

    /// A floating point computation overflowed or produced no usable value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Pipeline configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A file did not match its documented format.
    #[error("format error in {path}: {message}")]
    Format { path: String, message: String },
}

impl ScaleError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        ScaleError::Parameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        ScaleError::Data(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        ScaleError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn format(path: impl AsRef<std::path::Path>, message: impl Into<String>) -> Self {
        ScaleError::Format {
            path: path.as_ref().display().to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = ScaleError> = std::result::Result<T, E>;
