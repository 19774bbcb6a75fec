use alloc::boxed::Box;
use alloc::string::String;

use thiserror::Error;

use crate::reverse::ReverseTrace;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    /// A filter evaluation failed. `iteration` is set when the failure happened
    /// inside the reverse loop.
    #[error("filter failed{}: {message}", .iteration.map(|i| alloc::format!(" at iteration {i}")).unwrap_or_default())]
    Filter {
        iteration: Option<usize>,
        message: String,
    },

    /// An iterate became non-finite. The trace holds every record up to and
    /// including the last finite iterate.
    #[error("iteration diverged at iteration {iteration} (non-finite values)")]
    Divergence {
        iteration: usize,
        trace: Box<ReverseTrace>,
    },

    #[error("numerical failure: {0}")]
    Numerics(String),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub fn filter(msg: impl Into<String>) -> Self {
        Error::Filter {
            iteration: None,
            message: msg.into(),
        }
    }
}
