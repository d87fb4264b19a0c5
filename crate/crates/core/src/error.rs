use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph construction failed: {0}")]
    Graph(String),

    #[error("disconnected or invalid gossip matrix: {0}")]
    InvalidGossip(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("invalid problem: {0}")]
    Problem(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("cache coherence violated at iteration {iteration}: error {error:e}")]
    CacheCoherence { iteration: usize, error: f64 },

    #[error("diverged at iteration {iteration}: suboptimality {subopt:e} exceeds guard")]
    Diverged {
        iteration: usize,
        subopt: f64,
        partial: Box<crate::trace::RunTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
