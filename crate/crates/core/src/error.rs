use thiserror::Error;

use crate::harris::CouplingViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rotation of order {order} is excluded: no locally finite translation-invariant vertex set admits it")]
    RotationExcluded { order: u32 },

    #[error("graph invariant violated ({invariant}): {detail}")]
    Invariant { invariant: &'static str, detail: String },

    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),

    #[error("vertex set touches the window rim at vertex {vertex}; degrees there are truncated")]
    RimContact { vertex: usize },

    #[error("{what}: L = {l} is too small, the minimal admissible L is {min_l}")]
    RegionTooSmall { what: &'static str, l: f64, min_l: f64 },

    #[error("coupling order violated: {0}")]
    CouplingViolation(Box<CouplingViolation>),

    #[error("internal assertion failed: {0}")]
    Assertion(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant { invariant, detail: detail.into() }
    }

    /// True for failures of a checked mathematical guarantee, as opposed to
    /// bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::CouplingViolation(_) | Error::Assertion(_))
    }
}
