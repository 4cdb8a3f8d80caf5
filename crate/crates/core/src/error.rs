use thiserror::Error;

/// Errors raised by kernel construction, certification and solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarrisError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("state index {index} out of range for {n} states")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measures of unequal mass ({0} vs {1}) have no finite dual distance")]
    MassMismatch(f64, f64),

    #[error("level set {{V <= {r}}} is empty")]
    EmptyLevelSet { r: f64 },

    #[error("no minorization: rows over the level set have disjoint supports")]
    NoMinorization,

    #[error("R = {r} too small: need R > 2K/(1-gamma) = {bound}")]
    RTooSmall { r: f64, bound: f64 },

    #[error("no grid point admits valid drift and minorization")]
    NoFeasiblePoint,

    #[error("certificate not usable: {0}")]
    Cert(String),

    #[error("contraction violated at step {step}: {current} > {rate} * {previous}")]
    ContractViolation {
        step: usize,
        previous: f64,
        current: f64,
        rate: f64,
    },

    #[error("stationary distribution is not unique ({dim}-dimensional fixed-point space)")]
    NonUniqueStationary { dim: usize },

    #[error("set S is not reached from nu_tilde within {cap} steps")]
    Unreachable { cap: usize },

    #[error("P^l nu_tilde vanishes on the support of nu_tilde")]
    SupportMismatch,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = HarrisError> = std::result::Result<T, E>;

pub(crate) fn param(msg: impl Into<String>) -> HarrisError {
    HarrisError::Param(msg.into())
}
