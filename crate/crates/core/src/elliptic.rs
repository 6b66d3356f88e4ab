//! The 1D model problem and the general second-order elliptic problem in 2D.

use std::sync::Arc;

use log::{debug, warn};

use crate::assembly::{
    apply_dirichlet, assemble_1d, assemble_boundary, assemble_load, assemble_stiffness_jobs, dirichlet_values,
    CoefficientSet, ReducedSystem, RulePolicy,
};
use crate::error::{FemError, Result};
use crate::linalg::{cg_solve, energy_norms, lu_solve, norm2, residual_norm, CgOptions, ErrorNorms};
use crate::mesh::{Mesh, Mesh1D};
use crate::problems::Manufactured;
use crate::quadrature::edge_rule;
use crate::refelem::{interpolate, ElementKind, FeFunction};
use crate::study::RateTable;

/// Linear finite elements for `-u'' = f` on `(0, 1)` with `u(0) = 0` and
/// `u'(1) = 0`, following the textbook algorithm: element loop for the
/// stiffness and mass matrices, first row replaced by `(1, 0, ..., 0)`, and
/// `K U = M f` solved for the nodal values.
pub fn solve_model_1d(mesh: &Mesh1D, f_nodal: &[f64]) -> Result<Vec<f64>> {
    let n = mesh.nodes().len();
    if f_nodal.len() != n {
        return Err(FemError::Dimension(format!("{} nodal values for {n} nodes", f_nodal.len())));
    }
    let (k, m) = assemble_1d(mesh);
    let f = m.matvec(f_nodal);
    let (k, f) = apply_dirichlet(&k, &f, &[(0, 0.0)]);
    lu_solve(&k, &f)
}

/// L2 and H1-seminorm errors of a piecewise linear 1D function given by its
/// nodal values (3-point Gauss per element).
pub fn model_1d_errors(
    mesh: &Mesh1D,
    u_nodal: &[f64],
    u: impl Fn(f64) -> f64,
    du: impl Fn(f64) -> f64,
) -> Result<ErrorNorms> {
    if u_nodal.len() != mesh.nodes().len() {
        return Err(FemError::Dimension(format!("{} nodal values for {} nodes", u_nodal.len(), mesh.nodes().len())));
    }
    let rule = edge_rule(3)?;
    let x = mesh.nodes();
    let (mut l2, mut h1) = (0.0, 0.0);
    for e in 0..mesh.n_elements() {
        let h = mesh.h(e);
        let slope = (u_nodal[e + 1] - u_nodal[e]) / h;
        for (s, w) in rule.points.iter().zip(&rule.weights) {
            let xq = x[e] + s * h;
            let uh = u_nodal[e] + slope * s * h;
            l2 += w * h * (u(xq) - uh).powi(2);
            h1 += w * h * (du(xq) - slope).powi(2);
        }
    }
    Ok(ErrorNorms { l2: l2.sqrt(), h1_semi: h1.sqrt() })
}

/// How Dirichlet conditions enter the linear solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolvePath {
    /// Eliminate Dirichlet DOFs; CG on symmetric problems, LU otherwise.
    #[default]
    Reduced,
    /// Replace Dirichlet rows by unit rows and solve the full system by LU.
    RowReplacement,
}

/// A boundary value problem on a fixed mesh and element.
#[derive(Clone)]
pub struct EllipticProblem {
    pub mesh: Arc<Mesh>,
    pub kind: ElementKind,
    pub coeffs: CoefficientSet,
    pub exact: Option<Manufactured>,
    pub path: SolvePath,
    pub cg: CgOptions,
    pub jobs: usize,
}

impl EllipticProblem {
    pub fn new(mesh: Arc<Mesh>, kind: ElementKind, coeffs: CoefficientSet) -> Self {
        EllipticProblem {
            mesh,
            kind,
            coeffs,
            exact: None,
            path: SolvePath::Reduced,
            cg: CgOptions { tol: 1e-12, max_iter: None },
            jobs: 1,
        }
    }

    pub fn with_exact(mut self, exact: Manufactured) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Poisson problem with `u = g = exact` on every boundary tag.
    pub fn poisson_dirichlet(mesh: Arc<Mesh>, kind: ElementKind, exact: Manufactured) -> Self {
        let tags = mesh.boundary_tags();
        let coeffs = CoefficientSet::poisson(exact.f.clone()).with_dirichlet(&tags, exact.u.clone());
        Self::new(mesh, kind, coeffs).with_exact(exact)
    }

    fn validate(&self) -> Result<()> {
        if !matches!(self.kind, ElementKind::P1 | ElementKind::P2) {
            return Err(FemError::UnsupportedElement(format!("conforming solver needs P1 or P2, got {}", self.kind)));
        }
        self.coeffs.check_tags(&self.mesh)?;
        self.coeffs.check_ellipticity(&self.mesh)
    }

    /// Samples `c - div(b)/2` at the centroids and warns where it is negative.
    fn advise_well_posedness(&self) {
        let Some(b) = &self.coeffs.advection else { return };
        let mesh = &self.mesh;
        for t in 0..mesh.n_triangles() {
            let x = mesh.centroid(t);
            let h = 1e-6 * mesh.diameter_of(t);
            let div = (b([x[0] + h, x[1]])[0] - b([x[0] - h, x[1]])[0] + b([x[0], x[1] + h])[1]
                - b([x[0], x[1] - h])[1])
                / (2.0 * h);
            let c = self.coeffs.reaction.as_ref().map_or(0.0, |c| c(x));
            if c - 0.5 * div < -1e-12 {
                warn!("c - div(b)/2 = {:.3e} < 0 in triangle {t}; the problem may be ill-posed", c - 0.5 * div);
                return;
            }
        }
    }
}

/// Discrete solution with solver diagnostics.
#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub u: FeFunction,
    /// CG iterations, `None` when a direct solve was used.
    pub iterations: Option<usize>,
    /// Relative residual of the solved algebraic system.
    pub residual: f64,
}

impl EllipticSolution {
    pub fn n_dofs(&self) -> usize {
        self.u.coefficients().len()
    }
}

/// Full matrix, load vector and `(dof, value)` Dirichlet pairs.
pub type AssembledSystem = (crate::linalg::SparseMatrix, Vec<f64>, Vec<(usize, f64)>);

/// Assembled full system `K u = F` (before Dirichlet handling) and the
/// Dirichlet DOFs with their values.
pub fn assemble_elliptic(problem: &EllipticProblem) -> Result<AssembledSystem> {
    problem.validate()?;
    let mesh = &problem.mesh;
    let kind = problem.kind;
    let k = assemble_stiffness_jobs(mesh, kind, &problem.coeffs, RulePolicy::Default, problem.jobs)?;
    let (kb, fb) = assemble_boundary(mesh, kind, &problem.coeffs)?;
    let k = k.add_scaled(1.0, &kb, 1.0)?;
    let mut f = match &problem.coeffs.source {
        Some(src) => assemble_load(mesh, kind, &|x| src(x), RulePolicy::Default)?,
        None => vec![0.0; k.rows()],
    };
    f.iter_mut().zip(&fb).for_each(|(a, b)| *a += b);
    let fixed = dirichlet_values(mesh, kind, &problem.coeffs)?;
    Ok((k, f, fixed))
}

pub fn solve_elliptic(problem: &EllipticProblem) -> Result<EllipticSolution> {
    problem.advise_well_posedness();
    let (k, f, fixed) = assemble_elliptic(problem)?;
    let (coeffs, iterations, residual) = match problem.path {
        SolvePath::RowReplacement => {
            let (kd, fd) = apply_dirichlet(&k, &f, &fixed);
            let x = lu_solve(&kd, &fd)?;
            let res = residual_norm(&kd, &x, &fd) / norm2(&fd).max(f64::MIN_POSITIVE);
            (x, None, res)
        }
        SolvePath::Reduced => {
            let sys = ReducedSystem::new(&k, &f, &fixed);
            let (x, iterations) = if problem.coeffs.is_symmetric() {
                let out = cg_solve(&sys.matrix, &sys.rhs, problem.cg)?;
                (out.x, Some(out.iterations))
            } else {
                (lu_solve(&sys.matrix, &sys.rhs)?, None)
            };
            let res = residual_norm(&sys.matrix, &x, &sys.rhs) / norm2(&sys.rhs).max(f64::MIN_POSITIVE);
            (sys.expand(&x), iterations, res)
        }
    };
    debug!("elliptic {}: {} DOFs, {} Dirichlet, residual {residual:.2e}", problem.kind, coeffs.len(), fixed.len());
    Ok(EllipticSolution { u: FeFunction::new(Arc::clone(&problem.mesh), problem.kind, coeffs)?, iterations, residual })
}

/// L2 and H1-seminorm errors against the manufactured solution.
pub fn solution_errors(u: &FeFunction, exact: &Manufactured) -> Result<ErrorNorms> {
    energy_norms(u, |x| (exact.u)(x), |x| (exact.grad)(x))
}

/// What a convergence study measures at each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StudyMode {
    #[default]
    Solve,
    /// Nodal interpolant of the exact solution, no solve.
    InterpolantOnly,
}

/// Runs `build(n)` for every `n` in `levels` and tabulates L2 and H1 errors.
pub fn convergence_study(
    levels: &[usize],
    mode: StudyMode,
    build: impl Fn(usize) -> Result<EllipticProblem>,
) -> Result<RateTable> {
    RateTable::check_levels(levels.len())?;
    let mut table = RateTable::new(&["l2", "h1"]);
    for &n in levels {
        let problem = build(n)?;
        let exact = problem
            .exact
            .clone()
            .ok_or_else(|| FemError::InvalidArgument("convergence study needs a manufactured solution".into()))?;
        let u = match mode {
            StudyMode::Solve => solve_elliptic(&problem)?.u,
            StudyMode::InterpolantOnly => interpolate(&problem.mesh, problem.kind, |x| (exact.u)(x))?,
        };
        let e = solution_errors(&u, &exact)?;
        table.push(problem.mesh.h_max(), u.coefficients().len(), vec![e.l2, e.h1_semi]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{constant, scalar, BoundaryCondition};
    use crate::mesh::unit_square_mesh;
    use crate::problems::sinsin;

    #[test]
    fn model_1d_nodal_values() {
        let mesh = Mesh1D::uniform(8).unwrap();
        let u = solve_model_1d(&mesh, &[1.0; 9]).unwrap();
        assert_eq!(u[0], 0.0);
        // linear elements are nodally exact for this problem up to the load approximation
        for (x, v) in mesh.nodes().iter().zip(&u) {
            assert!((v - (x - x * x / 2.0)).abs() < 1e-12, "{x}: {v}");
        }
    }

    #[test]
    fn linear_solution_reproduced() {
        let mesh = Arc::new(unit_square_mesh(4).unwrap());
        let g = scalar(|p| 1.0 + 2.0 * p[0] - 3.0 * p[1]);
        let coeffs = CoefficientSet::poisson(constant(0.0)).with_dirichlet(&[1, 2, 3, 4], g.clone());
        for path in [SolvePath::Reduced, SolvePath::RowReplacement] {
            let mut p = EllipticProblem::new(Arc::clone(&mesh), ElementKind::P1, coeffs.clone());
            p.path = path;
            let u = solve_elliptic(&p).unwrap().u;
            for (c, x) in u.coefficients().iter().zip(mesh.nodes()) {
                assert!((c - g(*x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn robin_reproduces_linear() {
        // u = x + 2y: on each side  du/dn + u = g
        let mesh = Arc::new(unit_square_mesh(3).unwrap());
        let u = |p: [f64; 2]| p[0] + 2.0 * p[1];
        let normals = [(1, [0.0, -1.0]), (2, [1.0, 0.0]), (3, [0.0, 1.0]), (4, [-1.0, 0.0])];
        let mut coeffs = CoefficientSet::poisson(constant(0.0));
        for (tag, n) in normals {
            let g = scalar(move |p| n[0] + 2.0 * n[1] + u(p));
            coeffs = coeffs.with_boundary(tag, BoundaryCondition::Robin { d: constant(1.0), g });
        }
        let sol = solve_elliptic(&EllipticProblem::new(Arc::clone(&mesh), ElementKind::P1, coeffs)).unwrap();
        for (c, x) in sol.u.coefficients().iter().zip(mesh.nodes()) {
            assert!((c - u(*x)).abs() < 1e-10);
        }
    }

    #[test]
    fn study_rejects_single_level() {
        let err = convergence_study(&[4], StudyMode::Solve, |n| {
            Ok(EllipticProblem::poisson_dirichlet(Arc::new(unit_square_mesh(n)?), ElementKind::P1, sinsin()))
        });
        assert!(matches!(err, Err(FemError::InvalidArgument(_))));
    }

    #[test]
    fn non_lagrange_kind_rejected() {
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let p = EllipticProblem::new(mesh, ElementKind::Rt0, CoefficientSet::poisson(constant(1.0)));
        assert!(matches!(solve_elliptic(&p), Err(FemError::UnsupportedElement(_))));
    }
}
