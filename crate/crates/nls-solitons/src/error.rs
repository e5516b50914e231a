//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by the library. The CLI maps them onto process exit codes
/// via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside an operation's documented domain.
    #[error("validation error: {0}")]
    Validation(String),
    /// `g_min >= 0`: the stationary system has no nontrivial solution.
    #[error("no ground state: g_min = {g_min} is not negative")]
    NoGroundState { g_min: f64 },
    /// An iterative method failed to converge (shooting bracket, integrator blow-up, ...).
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    /// Operation not available for this kind of input (e.g. analytic tables for custom g).
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A change of variables with a singular matrix.
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 3 for numerical non-convergence, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
