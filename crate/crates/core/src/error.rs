use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid axis {axis} for tensor of shape {shape:?}")]
    InvalidAxis { axis: usize, shape: Vec<usize> },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("backward requires a scalar root, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),

    #[error("invalid network: {0}")]
    Network(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated file ({message})")]
    Truncated { path: PathBuf, message: String },

    #[error(
        "{images}: image count {image_count} does not match label count {label_count} in {labels}"
    )]
    CountMismatch {
        images: PathBuf,
        labels: PathBuf,
        image_count: usize,
        label_count: usize,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    EigenNonConvergence { sweeps: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit status for the command line: 1 for configuration and
    /// argument problems, 2 for I/O and file-format problems, 3 for numeric
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config { .. } | Error::Network(_) => 1,
            Error::Io { .. }
            | Error::BadMagic { .. }
            | Error::Truncated { .. }
            | Error::CountMismatch { .. }
            | Error::Format { .. } => 2,
            Error::Shape { .. }
            | Error::InvalidAxis { .. }
            | Error::NonFinite { .. }
            | Error::NonScalarRoot(_)
            | Error::EigenNonConvergence { .. } => 3,
        }
    }
}
