use thiserror::Error;

/// Errors raised when an input is rejected outright.
///
/// Structural and flow problems in an otherwise well-formed graph are not
/// errors: they are collected in a [`ValidationReport`](crate::graph::ValidationReport).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown transition id {0}")]
    UnknownTransition(u32),

    #[error("instance is negative: {0}")]
    NegativeInstance(String),

    #[error("{what} requires {needed} but the cap is {cap}")]
    CapExceeded {
        what: &'static str,
        needed: String,
        cap: String,
    },

    #[error("permutation degree {got} does not match universe degree {expected}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("operation requires {0} mode")]
    WrongMode(&'static str),

    #[error("speciality undefined (empty valid set)")]
    EmptyValidSet,

    #[error("estimate diverged; increase samples")]
    EstimateDiverged,

    #[error("selector removes all flow")]
    SelectorRemovesAllFlow,

    #[error("stage flow sums to {0}, expected 1")]
    StageFlowNotUnit(String),

    #[error("unbalanced term system")]
    UnbalancedTerms,

    #[error("attachment at vertex {vertex}: {reason}")]
    BadAttachment { vertex: usize, reason: String },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
