use std::fmt;

use crate::estimators::Family;

/// Errors produced by the estimation and tuning routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("symmetric eigen-solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("covariance is not positive semi-definite: pivot at index {pivot} has value {value:e}")]
    NotPositiveSemidefinite { pivot: usize, value: f64 },

    #[error("{family} estimator is not supported by {method}")]
    UnsupportedFamily { family: Family, method: Method },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u64, column: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical kernels rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. })
    }
}

/// Methods that only accept some estimator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sure,
    GammaStar,
    OperatorBootstrap,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sure => "SURE",
            Method::GammaStar => "the squared-error expectation estimator",
            Method::OperatorBootstrap => "operator-norm bootstrap",
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
