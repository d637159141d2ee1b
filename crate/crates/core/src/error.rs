use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature order {0} is too small (need at least 2)")]
    OrderTooSmall(usize),

    #[error("sample length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid time horizon T = {0}")]
    InvalidHorizon(f64),

    #[error("time {t} outside the admissible range {range}")]
    InvalidTime { t: f64, range: &'static str },

    #[error("need at least one time panel")]
    NoSteps,

    #[error("degree {l} is smaller than |n| = {n}")]
    DegreeBelowOrder { l: i64, n: i64 },

    #[error("argument {0} outside [-1, 1]")]
    OutOfDomain(f64),

    #[error("frequency must be at least {min}, got {n}")]
    FrequencyTooSmall { n: i64, min: i64 },

    #[error("invalid control region: {0}")]
    InvalidRegion(String),

    #[error("invalid Carleman weight: {0}")]
    InvalidWeight(String),

    #[error("linear system is singular beyond ridge repair (condition estimate {0:e})")]
    Singular(f64),

    #[error("empty test family")]
    EmptyFamily,

    #[error("Carleman parameter s = {s} is below the admissible threshold {threshold}")]
    Inadmissible { s: f64, threshold: f64 },

    #[error("need at least {needed} longitude samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("truncation mismatch: {0}")]
    TruncationMismatch(String),

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
