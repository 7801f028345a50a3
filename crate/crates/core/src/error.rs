use thiserror::Error;

use crate::fits::{ResidualStats, SigmoidParams};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("tolerance {tol:e} is below the attainable floor {floor:e}")]
    ToleranceTooSmall { tol: f64, floor: f64 },

    #[error("truncation index {k} for s = {s}, tol = {tol:e} exceeds the hard cap {cap}")]
    TruncationCap {
        s: f64,
        tol: f64,
        k: f64,
        cap: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("sample abscissae must be distinct (duplicate s = {0})")]
    DuplicateSample(f64),

    #[error("non-finite value at grid point s = {0}")]
    NonFinite(f64),

    #[error(
        "fit did not converge after {iterations} iterations (best objective {:e})",
        best_objective
    )]
    NoConvergence {
        iterations: usize,
        best: SigmoidParams,
        best_objective: f64,
        stats: ResidualStats,
    },

    #[error(
        "oracle cross-check failed at a = {a}, s = {s}: direct {direct:e} vs transformed {transformed:e}"
    )]
    OracleMismatch {
        a: f64,
        s: f64,
        direct: f64,
        transformed: f64,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
