//! Failure modes surfaced by the library.

use alloc::string::String;
use core::fmt;

use crate::geom::Point;

/// Errors returned by constructors, solvers and cover builders.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands disagree on the ambient dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// An input violates a documented precondition.
    Precondition(String),
    /// The input is degenerate for the requested construction
    /// (for example a lower-dimensional convex body).
    Degenerate(String),
    /// An iterative solver exhausted its iteration cap. Carries the best
    /// iterate found and its optimality residual.
    SolverStall {
        iterations: usize,
        residual: f64,
        best: Point,
    },
    /// A piece-count or evaluation budget was exceeded.
    Budget(String),
    /// A verified run invariant failed (for example a displacement bound
    /// or a pairwise Lipschitz check).
    Invariant(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            Error::SolverStall {
                iterations,
                residual,
                ..
            } => write!(
                f,
                "solver stalled after {iterations} iterations (residual {residual:e})"
            ),
            Error::Budget(msg) => write!(f, "budget exceeded: {msg}"),
            Error::Invariant(msg) => write!(f, "invariant violated: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
