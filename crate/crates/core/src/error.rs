use serde::Serialize;
use thiserror::Error;

use crate::reducible::SpectrumClass;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, Error, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input spectrum ({class:?})")]
    DegenerateInput { class: SpectrumClass },

    #[error("matrix is a positive multiple of SO(3): infinitely many decompositions")]
    InfiniteSolutions,

    #[error("matrix already has rank <= 1")]
    AlreadyReducible,

    #[error("singular gauge: evaluation point coincides with the bubble center")]
    SingularGauge,

    #[error("point at distance {distance} lies outside the patch of radius {radius}")]
    OutOfPatch { distance: f64, radius: f64 },

    #[error("invalid cutoff scales: {0}")]
    InvalidScales(String),

    #[error("incomplete count: {reason} ({found} solutions found)")]
    IncompleteCount { reason: String, found: usize },

    #[error("indeterminate orientation sign (condition number {condition:e})")]
    IndeterminateSign { condition: f64 },

    #[error("fixed-point iteration failed to contract: {0}")]
    NonContraction(String),

    #[error("continuation failed at t = {t}: {reason}")]
    ContinuationFailure { t: f64, reason: String },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
