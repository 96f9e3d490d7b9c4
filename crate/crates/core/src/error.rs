use thiserror::Error;

/// Errors raised by the evaluators, the box calculus and the oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Every map exponent is zero, so the pushforward is a point mass.
    #[error("degenerate map: violates the precondition that not all a_i equal to zero")]
    DegenerateMap,

    /// A series or adaptive rule could not certify its error within its cap.
    #[error(
        "no convergence after {terms} steps (partial value {partial}, error bound {tail_bound})"
    )]
    NonConvergence {
        terms: usize,
        partial: f64,
        tail_bound: f64,
    },

    /// The tensor-grid oracle is limited to small dimensions.
    #[error("unsupported dimension {dim} (maximum {max})")]
    UnsupportedDimension { dim: usize, max: usize },

    /// Malformed input file.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
