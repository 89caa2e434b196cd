use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} has {got} entries, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inertia matrix is numerically singular (reciprocal condition {rcond:.3e})")]
    Singular { rcond: f64 },

    #[error("simulation diverged at t = {time:.6} s")]
    Divergence { time: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The final value theorem only applies to a stable transfer.
    #[error("final value theorem inapplicable: {0}")]
    Precondition(String),
}
