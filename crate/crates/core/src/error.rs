//! Error type shared by all solver modules.

use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A matrix or vector was constructed with zero rows/columns or a
    /// mismatched entry count.
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    /// A matrix or vector was constructed with a NaN or infinite entry.
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    /// A pivot fell below the singularity threshold during elimination.
    #[error("matrix is numerically singular (pivot {pivot:.3e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    /// A diagonal entry of the system matrix is (numerically) zero, so the
    /// Jacobi splitting has no iteration form.
    #[error("zero diagonal entry at row {0}: Jacobi splitting inapplicable")]
    ZeroDiagonal(usize),

    /// An iterate component (or an operand norm) exceeded 1e150.
    #[error("overflow at step {step}: iteration diverged")]
    Overflow { step: usize },

    /// The pair (phi, h) is not controllable; no gain can place the
    /// requested eigenvalue tuple.
    #[error("system is not controllable (controllability rank {rank} < {dim})")]
    NotControllable { rank: usize, dim: usize },

    /// The back-transform denominator 1 - k'x vanished; the solution is not
    /// recoverable from this fixed point.
    #[error("degenerate back-transform: 1 - k'x = {denominator:.3e}")]
    DegenerateBackTransform { denominator: f64 },

    /// A solver or weighting parameter is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
