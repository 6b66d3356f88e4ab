use std::io;

use thiserror::Error;

/// Errors raised by mesh handling, assembly and the solvers.
#[derive(Debug, Error)]
pub enum FemError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-conforming mesh: {0}")]
    Conformity(String),

    #[error("non-manifold edge ({0}, {1}) shared by {2} triangles")]
    NonManifold(usize, usize, usize),

    #[error("degenerate geometry in triangle {triangle}: {message}")]
    Geometry { triangle: usize, message: String },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("unsupported element: {0}")]
    UnsupportedElement(String),

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not symmetric: |A[{row},{col}] - A[{col},{row}]| = {deviation:.3e}")]
    NotSymmetric { row: usize, col: usize, deviation: f64 },

    #[error("matrix is singular to working precision (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("non-finite value encountered: {0}")]
    Numeric(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, FemError>;
