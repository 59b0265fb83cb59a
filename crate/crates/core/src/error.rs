//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or function parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An invalid network architecture was requested.
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    /// Array dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called in an inconsistent order (e.g. reverse pass
    /// without a matching recorded forward pass).
    #[error("state error: {0}")]
    State(String),

    /// The two probe responses for a module coincide, so the algebraic
    /// recovery divides by (near) zero.
    #[error("degenerate probes for module {module}: {detail}")]
    DegenerateProbes { module: usize, detail: String },

    /// A rational-map denominator vanished.
    #[error("singular denominator: {0}")]
    Singular(String),

    /// The counterexample construction is invalid for the given triple.
    #[error("invalid counterexample pair: {0}")]
    InvalidPair(String),

    /// An iterative solve ran out of budget.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// A run configuration is invalid.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration/usage problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::InvalidArchitecture(_)
            | Error::Shape(_)
            | Error::InvalidConfig(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::Domain(_)
            | Error::State(_)
            | Error::DegenerateProbes { .. }
            | Error::Singular(_)
            | Error::InvalidPair(_)
            | Error::Convergence(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
