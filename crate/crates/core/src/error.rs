//! Crate-wide error type.

use thiserror::Error;

/// Errors raised across the fusion toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{name}[{index}] = {value} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange {
        name: &'static str,
        index: usize,
        value: f64,
    },
    #[error("pd and pf have mismatched lengths: {pd_len} vs {pf_len}")]
    LengthMismatch { pd_len: usize, pf_len: usize },
    #[error("ensemble must contain at least one sensor")]
    EmptyEnsemble,
    #[error("enumeration engine requires K <= {max}, got K = {k}")]
    EnumerateTooLarge { k: usize, max: usize },
    #[error("count distribution entry {index} is negative: {value}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("count distribution sums to {sum}, expected 1 within {tol}")]
    NotNormalized { sum: f64, tol: f64 },
    #[error("count distributions have mismatched supports: {left} vs {right} entries")]
    SupportMismatch { left: usize, right: usize },
    #[error("singular distribution: P(l|H0) = 0 at l = {ell}")]
    SingularDistribution { ell: usize },
    #[error("{mode} power scaling requires a conditionally i.i.d. ensemble")]
    NonIidEnsemble { mode: &'static str },
    #[error("empty sample set under {hypothesis}")]
    EmptySamples { hypothesis: &'static str },
    #[error("ROC curves have no overlapping false-alarm range")]
    NonOverlappingCurves,
    #[error("diversity order must satisfy 1 <= N <= {max}, got {n}")]
    DiversityOutOfRange { n: usize, max: usize },
    #[error("scan grid must be strictly increasing with >= {min_points} points covering [0, {span}]")]
    InvalidScanGrid { min_points: usize, span: f64 },
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
