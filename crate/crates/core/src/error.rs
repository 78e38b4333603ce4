use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite gradient at iteration {iteration} (|x| = {x_norm:e})")]
    NonFinite { iteration: usize, x_norm: f64 },

    #[error("Hessian is not positive definite at the evaluation point")]
    NotPositiveDefinite,

    #[error("line search failed after {shrinks} shrinks (last step {last_step:e})")]
    LineSearchFailed { shrinks: usize, last_step: f64 },

    #[error("Newton refinement stopped after {iterations} iterations with |grad| = {grad_norm:e}")]
    NewtonNotConverged { iterations: usize, grad_norm: f64 },

    #[error("objective provides no curvature bounds; {0} requires them")]
    MissingCurvatureBounds(&'static str),

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: no records")]
    NoRecords { path: PathBuf },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            got,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
