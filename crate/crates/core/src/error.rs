use thiserror::Error;

/// Errors raised by the library. Each variant names the violated precondition.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph is disconnected; walk quantities require a connected graph")]
    Disconnected,
    #[error("invalid triangulation: {0}")]
    InvalidTriangulation(String),
    #[error("length mismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    #[error("malformed input: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// True for failures of an iterative or numerical procedure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
