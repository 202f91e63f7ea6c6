use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the map (non-positive state or alpha).
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A numerical search (bisection, bracket scan) could not complete.
    #[error("search failed: {0}")]
    Search(String),

    /// An envelope could not be mapped onto an alpha range.
    #[error("envelope scaling failed: {0}")]
    Scaling(String),

    /// The score diverged before any record could be produced.
    #[error("score diverged at step {step}")]
    Diverged { step: usize },

    /// A score record cannot be rendered.
    #[error("render error at step {step}: {reason}")]
    Render { step: usize, reason: String },

    /// Every cell of a likelihood map is zero.
    #[error("likelihood map is empty")]
    EmptyMap,

    #[error("malformed input: {0}")]
    Format(String),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
