use thiserror::Error;

use crate::spaces::SpaceKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("space kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        expected: SpaceKind,
        found: SpaceKind,
    },

    #[error("length mismatch in {context}: expected {expected}, found {found}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate least-squares system: numerical rank {rank} of {columns} columns")]
    Degenerate { rank: usize, columns: usize },

    #[error("activation mismatch between networks")]
    ActivationMismatch,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerical kind (as opposed to malformed input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Degenerate { .. } | Error::NonFinite(_))
    }
}
