use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} degrees of freedom, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("partner Hamiltonian is singular at eps = {eps} (requires eps > 0)")]
    Singular { eps: f64 },

    #[error("connection formula is singular at theta' = {theta} (sin theta' = 0)")]
    SingularPhase { theta: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integration failed at t = {t}, eps = {eps}: {reason}")]
    Integration { t: f64, eps: f64, reason: String },

    #[error("trajectory diverged at t = {t} (|z| = {norm:.3e})")]
    Divergence { t: f64, norm: f64 },

    #[error("invariant extraction failed: {0}")]
    Extraction(String),

    #[error("ensemble failed: {failed} of {total} trajectories failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("output directory {0} is locked by another run")]
    Locked(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
