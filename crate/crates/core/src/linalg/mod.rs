//! Sparse matrices, conjugate gradients, direct solves and error norms.

mod cg;
mod direct;
mod norms;
mod sparse;

pub use cg::{cg_solve, cg_solve_inspect, check_symmetry, CgOptions, CgOutcome};
pub use direct::{dense_solve, is_positive_definite, lu_solve, reverse_cuthill_mckee, MAX_DIRECT_STORAGE};
pub use norms::{energy_norms, energy_norms_with_order, error_rule_order, ErrorNorms};
pub use sparse::{CooBuilder, SparseMatrix};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `||A x - b||_2`.
pub fn residual_norm(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    ax.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Dense matrix-vector product.
pub fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, x)).collect()
}
