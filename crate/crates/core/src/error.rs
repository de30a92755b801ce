use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spin must satisfy 2J >= 1, got 2J = {0}")]
    InvalidSpin(i64),
    #[error("projection m = {m} is not allowed for J = {j}")]
    InvalidProjection { j: String, m: String },
    #[error("rank-2 tensor needs J >= 1, got J = {0}")]
    RankTooLow(String),
    #[error("{0} is not an integer or half-integer")]
    NotHalfInteger(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty axis: {0}")]
    EmptyAxis(&'static str),
    #[error("noise trace covers {available} s but the schedule needs {needed} s")]
    TraceTooShort { needed: f64, available: f64 },
    #[error("integration step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("insensitive working point: dF/dchi = {0}")]
    InsensitiveWorkingPoint(f64),
    #[error("no projection noise information: F = {0}")]
    NoProjectionNoise(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("rank-deficient design matrix (condition number {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("estimated probability {p} is outside the calibrated branch [{lo}, {hi}]")]
    FringeWrap { p: f64, lo: f64, hi: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
