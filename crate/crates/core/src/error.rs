//! Error type shared by the whole crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or input the caller can fix.
    #[error("validation: {0}")]
    Validation(String),

    /// Mathematically ill-posed request, e.g. a fit window with no
    /// points or a knee estimate on a curve with no descending branch.
    #[error("domain: {0}")]
    Domain(String),

    /// Data degenerate enough that the requested statistic is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Numerical method failed to converge.
    #[error("propagation failure (p index {p_index}, trial {trial_index}): {message}")]
    Propagation {
        p_index: usize,
        trial_index: usize,
        message: String,
    },

    /// Problem size exceeds a configured resource cap.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Malformed file content.
    #[error("format: {0}")]
    Format(String),

    /// Missing input a command depends on.
    #[error("dependency: {0}")]
    Dependency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
