//! Dual mixed method for `-Laplace u = f`, `u = 0` on the boundary:
//! find `sigma_h` in RT0 and `u_h` in P0 with
//!
//! `(sigma_h, tau) + (div tau, u_h) = 0` and `(div sigma_h, v) = -(f, v)`.
//!
//! RT0 coefficients are the fluxes `int_F sigma . nu_F` through the faces in
//! their global orientation; the unknown vector lists all face fluxes first,
//! then one value per triangle.

use std::sync::Arc;

use log::debug;

use crate::assembly::{ScalarField, VectorField};
use crate::error::{FemError, Result};
use crate::linalg::{lu_solve, norm2, residual_norm, CooBuilder, SparseMatrix};
use crate::mesh::{unit_square_mesh, Mesh, Point};
use crate::problems::Manufactured;
use crate::quadrature::{edge_rule, integrate_cell, triangle_rule, triangle_rule_at_least};
use crate::refelem::{rt0_physical, ElementKind, FeFunction};
use crate::study::RateTable;

/// Block system `[[A, B^T], [B, 0]] (sigma; u) = (0; -F)`.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub mesh: Arc<Mesh>,
    /// RT0 mass matrix `A_ij = (psi_j, psi_i)`.
    pub a: SparseMatrix,
    /// Divergence block `B_Kj = (div psi_j, 1_K)`.
    pub b: SparseMatrix,
    /// `F_K = int_K f`.
    pub load: Vec<f64>,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

impl SaddleSystem {
    pub fn n_faces(&self) -> usize {
        self.a.rows()
    }

    pub fn n_cells(&self) -> usize {
        self.b.rows()
    }
}

/// Flux and scalar parts of a mixed solution.
#[derive(Debug, Clone)]
pub struct MixedSolution {
    pub sigma: FeFunction,
    pub u: FeFunction,
    /// Relative residual of the saddle-point solve.
    pub residual: f64,
}

/// Assembles the saddle-point system; the Dirichlet condition is natural.
pub fn assemble_mixed(mesh: &Arc<Mesh>, f: &dyn Fn(Point) -> f64) -> Result<SaddleSystem> {
    let nf = mesh.n_faces();
    let nt = mesh.n_triangles();
    let rule = triangle_rule(2)?;
    let mut a = CooBuilder::with_capacity(nf, nf, 9 * nt);
    let mut b = CooBuilder::with_capacity(nt, nf, 3 * nt);
    let mut load = vec![0.0; nt];
    for t in 0..nt {
        let map = mesh.affine_map(t)?;
        let faces = mesh.triangle_faces()[t];
        let mut local = [[0.0; 3]; 3];
        let mut div = [0.0; 3];
        for (xi, w) in rule.reference_points().zip(&rule.weights) {
            let x = map.map(xi);
            let (psi, d) = rt0_physical(mesh, t, x);
            div = d;
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += w * map.det * (psi[i][0] * psi[j][0] + psi[i][1] * psi[j][1]);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                a.add(faces[i], faces[j], local[i][j]);
            }
            // div psi_j is constant, so its integral is |K| div psi_j = +-1
            b.add(t, faces[i], div[i] * mesh.area(t));
        }
        load[t] = integrate_cell(&rule, &map, f);
    }
    let a = a.finalize();
    let b = b.finalize();
    let mut full = CooBuilder::with_capacity(nf + nt, nf + nt, a.nnz() + 2 * b.nnz());
    for i in 0..nf {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            full.add(i, j, v);
        }
    }
    for k in 0..nt {
        let (cols, vals) = b.row(k);
        for (&j, &v) in cols.iter().zip(vals) {
            full.add(nf + k, j, v);
            full.add(j, nf + k, v);
        }
    }
    let mut rhs = vec![0.0; nf];
    rhs.extend(load.iter().map(|v| -v));
    Ok(SaddleSystem { mesh: Arc::clone(mesh), a, b, load, matrix: full.finalize(), rhs })
}

/// Solves the saddle-point system with the direct solver.
pub fn solve_mixed(system: &SaddleSystem) -> Result<MixedSolution> {
    let x = lu_solve(&system.matrix, &system.rhs)?;
    let residual = residual_norm(&system.matrix, &x, &system.rhs) / norm2(&system.rhs).max(f64::MIN_POSITIVE);
    if residual > 1e-9 {
        return Err(FemError::Numeric(format!("mixed solve residual {residual:.3e} exceeds 1e-9")));
    }
    let nf = system.n_faces();
    debug!("mixed: {} faces, {} cells, residual {residual:.2e}", nf, system.n_cells());
    let mesh = Arc::clone(&system.mesh);
    Ok(MixedSolution {
        sigma: FeFunction::new(Arc::clone(&mesh), ElementKind::Rt0, x[..nf].to_vec())?,
        u: FeFunction::new(mesh, ElementKind::P0, x[nf..].to_vec())?,
        residual,
    })
}

/// `(div sigma_h, 1_K) + int_K f` for every triangle; zero up to round-off
/// for a solution of the mixed system.
pub fn conservation_defects(system: &SaddleSystem, sol: &MixedSolution) -> Vec<f64> {
    let mesh = &system.mesh;
    (0..mesh.n_triangles()).map(|t| sol.sigma.divergence(t) * mesh.area(t) + system.load[t]).collect()
}

/// RT projection: the face coefficients are `int_F tau . nu_F ds`.
pub fn rt_project(tau: &dyn Fn(Point) -> [f64; 2], mesh: &Arc<Mesh>) -> Result<FeFunction> {
    let rule = edge_rule(3)?;
    let coeffs = (0..mesh.n_faces())
        .map(|face| {
            let [a, b] = mesh.face_nodes(face);
            let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
            let n = mesh.face_normal(face);
            let len = mesh.face_length(face);
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(&s, w)| {
                    let v = tau([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
                    w * len * (v[0] * n[0] + v[1] * n[1])
                })
                .sum()
        })
        .collect();
    FeFunction::new(Arc::clone(mesh), ElementKind::Rt0, coeffs)
}

/// `||tau - tau_h||_{L2}` for an RT0 field.
pub fn rt_l2_error(tau_h: &FeFunction, tau: &dyn Fn(Point) -> [f64; 2]) -> Result<f64> {
    let mesh = tau_h.mesh();
    let rule = triangle_rule_at_least(5);
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        let map = mesh.affine_map(t)?;
        s += integrate_cell(&rule, &map, |x| {
            let (a, b) = (tau(x), tau_h.vector_value(t, x));
            (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
        });
    }
    Ok(s.sqrt())
}

/// Errors of a mixed solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedErrors {
    pub l2_u: f64,
    pub l2_sigma: f64,
    /// `(||sigma - sigma_h||^2 + ||div sigma - div sigma_h||^2)^{1/2}`.
    pub hdiv_sigma: f64,
}

/// Errors against `u`, `sigma = grad u` and `div sigma`.
pub fn mixed_errors(
    sol: &MixedSolution,
    u: &dyn Fn(Point) -> f64,
    sigma: &dyn Fn(Point) -> [f64; 2],
    div_sigma: &dyn Fn(Point) -> f64,
) -> Result<MixedErrors> {
    let mesh = sol.u.mesh();
    let rule = triangle_rule_at_least(5);
    let (mut eu, mut ediv) = (0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let map = mesh.affine_map(t)?;
        let uh = sol.u.coefficients()[t];
        let dh = sol.sigma.divergence(t);
        eu += integrate_cell(&rule, &map, |x| (u(x) - uh).powi(2));
        ediv += integrate_cell(&rule, &map, |x| (div_sigma(x) - dh).powi(2));
    }
    let l2_sigma = rt_l2_error(&sol.sigma, sigma)?;
    Ok(MixedErrors { l2_u: eu.sqrt(), l2_sigma, hdiv_sigma: (l2_sigma * l2_sigma + ediv).sqrt() })
}

/// Solves the manufactured problem on `unit_square_mesh(n)` for each level;
/// columns `u_l2`, `sigma_l2`, `sigma_hdiv`. Also returns the largest
/// conservation defect seen.
pub fn mixed_study(levels: &[usize], exact: &Manufactured) -> Result<(RateTable, f64)> {
    RateTable::check_levels(levels.len())?;
    let mut table = RateTable::new(&["u_l2", "sigma_l2", "sigma_hdiv"]);
    let mut worst = 0.0f64;
    let f: ScalarField = exact.f.clone();
    let grad: VectorField = exact.grad.clone();
    for &n in levels {
        let mesh = Arc::new(unit_square_mesh(n)?);
        let sys = assemble_mixed(&mesh, &|x| f(x))?;
        let sol = solve_mixed(&sys)?;
        worst = conservation_defects(&sys, &sol).iter().fold(worst, |m, d| m.max(d.abs()));
        let e = mixed_errors(&sol, &|x| (exact.u)(x), &|x| grad(x), &|x| -f(x))?;
        table.push(mesh.h_max(), sys.matrix.rows(), vec![e.l2_u, e.l2_sigma, e.hdiv_sigma]);
    }
    Ok((table, worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> Arc<Mesh> {
        Arc::new(unit_square_mesh(n).unwrap())
    }

    #[test]
    fn divergence_rows_are_signed_unit_fluxes() {
        let mesh = square(2);
        let sys = assemble_mixed(&mesh, &|_| 1.0).unwrap();
        for t in 0..mesh.n_triangles() {
            let (cols, vals) = sys.b.row(t);
            assert_eq!(cols.len(), 3);
            for (&face, v) in cols.iter().zip(vals) {
                let local = mesh.triangle_faces()[t].iter().position(|&f| f == face).unwrap();
                assert!((v - mesh.face_sign(t, local)).abs() < 1e-14);
            }
        }
        assert!((sys.rhs.iter().sum::<f64>() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let sys = assemble_mixed(&square(3), &|_| 0.0).unwrap();
        let sol = solve_mixed(&sys).unwrap();
        assert!(sol.sigma.coefficients().iter().chain(sol.u.coefficients()).all(|v| *v == 0.0));
    }

    #[test]
    fn projection_reproduces_rt0_fields() {
        let mesh = square(3);
        let fields: [&dyn Fn(Point) -> [f64; 2]; 2] = [&|_| [0.3, -1.2], &|x| [x[0], x[1]]];
        for tau in fields {
            let p = rt_project(tau, &mesh).unwrap();
            assert!(rt_l2_error(&p, tau).unwrap() < 1e-13);
        }
    }

    #[test]
    fn conservation_holds_elementwise() {
        let ex = crate::problems::sinsin();
        let sys = assemble_mixed(&square(6), &|x| (ex.f)(x)).unwrap();
        let sol = solve_mixed(&sys).unwrap();
        assert!(conservation_defects(&sys, &sol).iter().all(|d| d.abs() < 1e-10));
    }
}
