//! Shared error type for the pipeline crates.

use thiserror::Error;

/// Errors produced by pipeline operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated (bad shapes, out-of-range
    /// values, invalid configuration).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The computation produced non-finite values or is otherwise
    /// numerically unusable.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An iterative algorithm did not converge within its iteration budget.
    #[error("no convergence after {iterations} iterations: {message}")]
    Convergence { iterations: usize, message: String },

    /// Fewer usable directions than requested during a decomposition.
    #[error("rank deficient: requested {requested} components, only {achievable} available")]
    Rank { requested: usize, achievable: usize },

    /// A label sequence cannot be aligned to the available frames.
    #[error("infeasible label: needs {required} frames, only {available} available")]
    InfeasibleLabel { required: usize, available: usize },

    /// An operation would produce a degenerate (e.g. all-zero) output.
    #[error("degenerate output: {0}")]
    Degenerate(String),

    /// The dataset as a whole is unusable for the requested operation.
    #[error("unusable dataset: {0}")]
    Dataset(String),

    /// File or directory access failed.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A file's contents do not match the expected format.
    #[error("format error in {path}{}: {message}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Format {
        path: String,
        line: Option<usize>,
        message: String,
    },
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<String>, line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
