use log::debug;

use super::sparse::SparseMatrix;
use super::{dot, norm2};
use crate::error::{FemError, Result};

/// Stopping rule of [`cg_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `||Ax - b|| <= tol ||b||`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: 1e-10, max_iter: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
}

/// Unpreconditioned conjugate gradients for a symmetric positive definite `A`.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], opts: CgOptions) -> Result<CgOutcome> {
    cg_solve_inspect(a, b, opts, |_, _| {})
}

/// Checks `|A_ij - A_ji| <= 1e-10 max|A|` on every stored entry of small
/// matrices and on 100 evenly spaced entries of large ones.
pub fn check_symmetry(a: &SparseMatrix) -> Result<()> {
    let tol = 1e-10 * a.max_abs().max(1.0);
    let nnz = a.nnz();
    let samples: Box<dyn Iterator<Item = usize>> =
        if nnz <= 10_000 { Box::new(0..nnz) } else { Box::new((0..100).map(move |s| s * nnz / 100)) };
    let offsets = a.offsets();
    for k in samples {
        let i = offsets.partition_point(|&o| o <= k) - 1;
        let j = a.indices()[k];
        let deviation = (a.values()[k] - a.get(j, i)).abs();
        if deviation > tol {
            return Err(FemError::NotSymmetric { row: i, col: j, deviation });
        }
    }
    Ok(())
}

/// [`cg_solve`] calling `inspect(iteration, x)` after every update.
pub fn cg_solve_inspect(
    a: &SparseMatrix,
    b: &[f64],
    opts: CgOptions,
    mut inspect: impl FnMut(usize, &[f64]),
) -> Result<CgOutcome> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(FemError::Dimension(format!(
            "cg: matrix is {:?}, right-hand side has length {}",
            a.shape(),
            b.len()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(FemError::Numeric("right-hand side contains NaN or infinity".into()));
    }
    check_symmetry(a)?;
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, residual: 0.0 });
    }
    let target = opts.tol * b_norm;
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while rr.sqrt() > target {
        if iterations >= max_iter {
            return Err(FemError::NoConvergence { iterations, residual: rr.sqrt() / b_norm });
        }
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(FemError::Numeric(format!("p^T A p = {pap} in iteration {iterations}")));
        }
        if pap <= 0.0 {
            return Err(FemError::Numeric(format!(
                "matrix is not positive definite (p^T A p = {pap:e} in iteration {iterations})"
            )));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
        inspect(iterations, &x);
    }
    // recurrence residuals drift; report the true one
    let ax = a.matvec(&x);
    let true_res = norm2(&ax.iter().zip(b).map(|(u, v)| u - v).collect::<Vec<_>>()) / b_norm;
    debug!("cg: n = {n}, {iterations} iterations, relative residual {true_res:.3e}");
    Ok(CgOutcome { x, iterations, residual: true_res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CooBuilder;

    fn tridiag(n: usize) -> SparseMatrix {
        let mut b = CooBuilder::new(n, n);
        for i in 0..n {
            b.add(i, i, 2.0);
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
                b.add(i + 1, i, -1.0);
            }
        }
        b.finalize()
    }

    #[test]
    fn identity_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.5];
        let out = cg_solve(&SparseMatrix::identity(3), &b, CgOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, b);
    }

    #[test]
    fn tridiagonal_solve() {
        let a = tridiag(10);
        let out = cg_solve(&a, &[1.0; 10], CgOptions::default()).unwrap();
        // exact solution of the (2,-1) system with unit load: x_i = (i+1)(n-i)/2
        for (i, x) in out.x.iter().enumerate() {
            let exact = (i + 1) as f64 * (10 - i) as f64 / 2.0;
            assert!((x - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn nonsymmetric_rejected() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![0.0, 2.0]]);
        assert!(matches!(cg_solve(&a, &[1.0, 1.0], CgOptions::default()), Err(FemError::NotSymmetric { .. })));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let a = tridiag(50);
        let err = cg_solve(&a, &[1.0; 50], CgOptions { tol: 1e-12, max_iter: Some(3) }).unwrap_err();
        match err {
            FemError::NoConvergence { iterations, residual } => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn nan_rhs_rejected() {
        let a = tridiag(3);
        assert!(matches!(cg_solve(&a, &[1.0, f64::NAN, 0.0], CgOptions::default()), Err(FemError::Numeric(_))));
    }
}
