use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical kernels and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value:?} outside allowed range {range}")]
    Range {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("unsupported potential: {0}")]
    UnsupportedPotential(String),

    #[error("quadrature did not converge: estimated error {achieved:e} > requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("|u| = {modulus} < {threshold} on the sampling loop; degree is undefined")]
    LowModulus { modulus: f64, threshold: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value detected at step {step}")]
    Divergence { step: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("root not found: {message}")]
    RootNotFound { message: String, table: Vec<(f64, f64)> },

    #[error("singular ODE: f'' + f changes sign at theta = {theta} (s = {s})")]
    SingularOde { theta: f64, s: f64 },

    #[error("construction assumption violated: {0}")]
    Assumption(String),

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("line {line}: key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn range(what: &'static str, value: f64, range: impl Into<String>) -> Self {
        Error::Range {
            what,
            value,
            range: range.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::InvalidConfig(_)
            | Error::Range { .. }
            | Error::InvalidPotential(_)
            | Error::UnsupportedPotential(_) => 2,
            Error::Io { .. } => 4,
            Error::Json(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
