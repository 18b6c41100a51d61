use std::path::PathBuf;

use thiserror::Error;

use crate::space::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid metric-measure space: {}", format_violations(.0))]
    InvalidSpace(Vec<Violation>),

    #[error("invalid conductance matrix: {0}")]
    InvalidDirichlet(String),

    #[error("conductance graph is disconnected")]
    Disconnected,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time must be {requirement}, got {t}")]
    Time { t: f64, requirement: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("measures have unequal total mass ({mass0} vs {mass1}); W1 is infinite")]
    UnequalMass { mass0: f64, mass1: f64 },

    #[error("measure has a negative atom at point {point} ({value})")]
    NegativeAtom { point: usize, value: f64 },

    #[error("{n} points exceeds the enumeration limit {limit}; use h1_sweep instead")]
    EnumerationLimit { n: usize, limit: usize },

    #[error("eigendecomposition residual {residual:e} too large for eigenvalue {index}")]
    Eigen { index: usize, residual: f64 },

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error("function must have zero mean (integral = {0:e})")]
    NotMeanZero(f64),

    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::File { path: path.into(), message: message.to_string() }
    }
}

pub(crate) fn require_positive_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::Time { t, requirement: "finite and > 0" })
    }
}

pub(crate) fn require_nonnegative_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Time { t, requirement: "finite and >= 0" })
    }
}
