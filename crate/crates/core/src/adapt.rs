//! A posteriori error estimators, marking and the adaptive loop
//! solve -> estimate -> mark -> refine.

use std::str::FromStr;
use std::sync::Arc;

use log::info;

use crate::assembly::{ScalarField, VectorField};
use crate::elliptic::{solution_errors, solve_elliptic, EllipticProblem};
use crate::error::{FemError, Result};
use crate::mesh::{Mesh, Mesh1D, Point};
use crate::quadrature::{edge_rule, triangle_rule};
use crate::refelem::{ElementKind, FeFunction};

/// How element indicators are combined into a global estimate.
///
/// The 2D estimators default to `L2`: for smooth data each `eta_K` of a P1
/// solution is `O(h^2)`, so the plain sum over `O(h^-2)` elements does not
/// decrease under refinement, while the root-sum-square is `O(h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Composition {
    /// `sum_K eta_K`.
    Sum,
    /// `(sum_K eta_K^2)^{1/2}`.
    #[default]
    L2,
}

impl FromStr for Composition {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Composition::Sum),
            "l2" | "rss" => Ok(Composition::L2),
            other => Err(FemError::InvalidArgument(format!("unknown composition '{other}'; expected sum or l2"))),
        }
    }
}

/// Per-element indicators `eta_K >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorIndicator {
    pub local: Vec<f64>,
    pub composition: Composition,
}

impl ErrorIndicator {
    /// Indicator with the plain-sum global value.
    pub fn new(local: Vec<f64>) -> Self {
        ErrorIndicator { local, composition: Composition::Sum }
    }

    pub fn with_composition(mut self, composition: Composition) -> Self {
        self.composition = composition;
        self
    }

    pub fn global(&self) -> f64 {
        match self.composition {
            Composition::Sum => self.local.iter().sum(),
            Composition::L2 => self.local.iter().map(|e| e * e).sum::<f64>().sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }
}

/// `eta_i = h_i^2 ||f||_{L2(x_{i-1}, x_i)} / 2` for a linear 1D solution.
pub fn estimate_residual_1d(mesh: &Mesh1D, u: &[f64], f: impl Fn(f64) -> f64) -> Result<ErrorIndicator> {
    if u.len() != mesh.nodes().len() {
        return Err(FemError::Dimension(format!("{} coefficients for {} nodes", u.len(), mesh.nodes().len())));
    }
    let rule = edge_rule(3)?;
    let local = (0..mesh.n_elements())
        .map(|e| {
            let (a, h) = (mesh.nodes()[e], mesh.h(e));
            let f2: f64 = rule.points.iter().zip(&rule.weights).map(|(s, w)| w * f(a + s * h).powi(2)).sum();
            0.5 * h * h * (h * f2).sqrt()
        })
        .collect();
    Ok(ErrorIndicator::new(local))
}

/// Which residual estimator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorKind {
    /// Energy-norm estimator: weights `h_K` and `h_K^{1/2}`.
    #[default]
    Residual,
    /// L2 duality estimator: weights `h_K^2` and `h_K^{3/2}`.
    DualityL2,
}

impl FromStr for EstimatorKind {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "residual" => Ok(EstimatorKind::Residual),
            "duality" | "duality-l2" => Ok(EstimatorKind::DualityL2),
            other => {
                Err(FemError::InvalidArgument(format!("unknown estimator '{other}'; expected residual or duality")))
            }
        }
    }
}

/// Unweighted ingredients of the 2D residual estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualParts {
    /// Element diameters `h_K`.
    pub h: Vec<f64>,
    /// `||f + div(alpha grad u_h)||_{L2(K)}`.
    pub element: Vec<f64>,
    /// `(1/2) sum_F ||[alpha grad u_h . nu]||_{L2(F)}` over interior faces of `K`.
    pub faces: Vec<f64>,
}

impl ResidualParts {
    pub fn indicator(&self, kind: EstimatorKind) -> ErrorIndicator {
        let local = self
            .h
            .iter()
            .zip(&self.element)
            .zip(&self.faces)
            .map(|((&h, &r), &j)| match kind {
                EstimatorKind::Residual => h * r + h.sqrt() * j,
                EstimatorKind::DualityL2 => h * h * r + h * h.sqrt() * j,
            })
            .collect();
        ErrorIndicator::new(local).with_composition(Composition::L2)
    }
}

/// Diffusion coefficient `alpha` with an optional analytic gradient; the
/// gradient is approximated by central differences of step `1e-6 h_K` otherwise.
#[derive(Clone)]
pub struct Diffusivity {
    pub alpha: ScalarField,
    pub gradient: Option<VectorField>,
}

impl Diffusivity {
    pub fn constant(a: f64) -> Self {
        Diffusivity { alpha: Arc::new(move |_| a), gradient: Some(Arc::new(|_| [0.0, 0.0])) }
    }

    fn grad(&self, x: Point, h: f64) -> [f64; 2] {
        match &self.gradient {
            Some(g) => g(x),
            None => {
                let d = 1e-6 * h;
                let a = &self.alpha;
                [
                    (a([x[0] + d, x[1]]) - a([x[0] - d, x[1]])) / (2.0 * d),
                    (a([x[0], x[1] + d]) - a([x[0], x[1] - d])) / (2.0 * d),
                ]
            }
        }
    }
}

/// Element residuals and normal-flux jumps of a P1 solution.
pub fn residual_parts(u: &FeFunction, f: &dyn Fn(Point) -> f64, alpha: &Diffusivity) -> Result<ResidualParts> {
    if u.kind() != ElementKind::P1 {
        return Err(FemError::UnsupportedElement(format!("residual estimators need a P1 solution, got {}", u.kind())));
    }
    let mesh: &Mesh = u.mesh();
    let nt = mesh.n_triangles();
    let rule = triangle_rule(5)?;
    let pts: Vec<Point> = rule.reference_points().collect();
    let mut grads = Vec::with_capacity(nt);
    let mut h = Vec::with_capacity(nt);
    let mut element = Vec::with_capacity(nt);
    for t in 0..nt {
        let map = mesh.affine_map(t)?;
        let g = u.gradient(t, &map, [0.0, 0.0]);
        let hk = mesh.diameter_of(t);
        let mut r2 = 0.0;
        for (xi, w) in pts.iter().zip(&rule.weights) {
            let x = map.map(*xi);
            let ga = alpha.grad(x, hk);
            let r = f(x) + ga[0] * g[0] + ga[1] * g[1];
            r2 += w * r * r;
        }
        element.push((map.det * r2).sqrt());
        h.push(hk);
        grads.push(g);
    }
    let edge = edge_rule(2)?;
    let mut faces = vec![0.0; nt];
    for (fi, face) in mesh.interior_faces().iter().enumerate() {
        let nu = mesh.face_normal(fi);
        let [a, b] = face.nodes.map(|i| mesh.nodes()[i]);
        let (g1, g2) = (grads[face.left], grads[face.right]);
        let dg = (g1[0] - g2[0]) * nu[0] + (g1[1] - g2[1]) * nu[1];
        let len = mesh.face_length(fi);
        let j2: f64 = edge
            .points
            .iter()
            .zip(&edge.weights)
            .map(|(s, w)| {
                let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                w * ((alpha.alpha)(x) * dg).powi(2)
            })
            .sum();
        let jump = (len * j2).sqrt();
        faces[face.left] += 0.5 * jump;
        faces[face.right] += 0.5 * jump;
    }
    Ok(ResidualParts { h, element, faces })
}

/// `eta_K = h_K ||f + div(alpha grad u_h)||_K + (1/2) sum_F h_K^{1/2} ||[alpha grad u_h . nu]||_F`.
pub fn estimate_residual_2d(u: &FeFunction, f: &dyn Fn(Point) -> f64, alpha: &Diffusivity) -> Result<ErrorIndicator> {
    Ok(residual_parts(u, f, alpha)?.indicator(EstimatorKind::Residual))
}

/// L2 duality estimator with weights `h_K^2` and `h_K^{3/2}`.
pub fn estimate_duality_l2(u: &FeFunction, f: &dyn Fn(Point) -> f64, alpha: &Diffusivity) -> Result<ErrorIndicator> {
    Ok(residual_parts(u, f, alpha)?.indicator(EstimatorKind::DualityL2))
}

/// Marking strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Marking {
    /// `{K : eta_K >= theta max eta}`.
    #[default]
    Max,
    /// Smallest set carrying a `theta` fraction of `sum eta`.
    Dorfler,
}

impl std::str::FromStr for Marking {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Marking::Max),
            "dorfler" | "dörfler" | "doerfler" => Ok(Marking::Dorfler),
            _ => Err(FemError::InvalidArgument(format!("unknown marking strategy '{s}'"))),
        }
    }
}

/// Marked element indices in increasing order. Nothing is marked when all
/// indicators vanish.
pub fn mark_elements(eta: &ErrorIndicator, strategy: Marking, theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(FemError::InvalidArgument(format!("theta must lie in (0, 1], got {theta}")));
    }
    let local = &eta.local;
    let max = local.iter().copied().fold(0.0, f64::max);
    if local.is_empty() || max <= 0.0 {
        return Ok(Vec::new());
    }
    match strategy {
        Marking::Max => Ok((0..local.len()).filter(|&k| local[k] >= theta * max).collect()),
        Marking::Dorfler => {
            let total: f64 = local.iter().sum();
            let mut order: Vec<usize> = (0..local.len()).collect();
            order.sort_by(|&a, &b| local[b].total_cmp(&local[a]).then(a.cmp(&b)));
            let mut acc = 0.0;
            let mut marked = Vec::new();
            for k in order {
                if acc >= theta * total {
                    break;
                }
                acc += local[k];
                marked.push(k);
            }
            marked.sort_unstable();
            Ok(marked)
        }
    }
}

/// Settings of [`adaptive_loop`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub estimator: EstimatorKind,
    pub marking: Marking,
    pub theta: f64,
    pub tol: f64,
    pub max_cycles: usize,
    pub composition: Composition,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            estimator: EstimatorKind::Residual,
            marking: Marking::Max,
            theta: 0.5,
            tol: 0.0,
            max_cycles: 10,
            composition: Composition::L2,
        }
    }
}

/// One row of the adaptive history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub n_dofs: usize,
    pub eta: f64,
    /// NaN without a manufactured solution.
    pub err_l2: f64,
    pub err_h1: f64,
}

#[derive(Debug, Clone)]
pub struct AdaptiveResult {
    pub solution: FeFunction,
    pub indicator: ErrorIndicator,
    pub history: Vec<CycleRecord>,
    pub converged: bool,
}

impl AdaptiveResult {
    /// CSV `cycle,n_dofs,eta_global,true_err_l2,true_err_h1`.
    pub fn history_csv(&self) -> String {
        use crate::study::fmt_float;
        let mut s = String::from("cycle,n_dofs,eta_global,true_err_l2,true_err_h1\n");
        for r in &self.history {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.cycle,
                r.n_dofs,
                fmt_float(r.eta),
                fmt_float(r.err_l2),
                fmt_float(r.err_h1)
            ));
        }
        s
    }
}

/// Scalar diffusivity of an isotropic diffusion tensor `alpha I`.
fn diffusivity_of(problem: &EllipticProblem) -> Result<Diffusivity> {
    let c = &problem.coeffs;
    if c.advection.is_some() || c.reaction.is_some() {
        return Err(FemError::Configuration(
            "residual estimators cover -div(alpha grad u) = f only; remove advection and reaction".into(),
        ));
    }
    let a =
        c.diffusion.clone().ok_or_else(|| FemError::Configuration("estimator needs a diffusion coefficient".into()))?;
    let mesh = &problem.mesh;
    for t in 0..mesh.n_triangles() {
        let m = a(mesh.centroid(t));
        if m[0][1] != 0.0 || m[1][0] != 0.0 || m[0][0] != m[1][1] {
            return Err(FemError::Configuration(format!(
                "estimator needs an isotropic diffusion alpha I, got {m:?} in triangle {t}"
            )));
        }
    }
    Ok(Diffusivity { alpha: Arc::new(move |x| a(x)[0][0]), gradient: c.diffusion_gradient.clone() })
}

/// Estimates the error of a P1 solution of `problem`.
pub fn estimate(problem: &EllipticProblem, u: &FeFunction, kind: EstimatorKind) -> Result<ErrorIndicator> {
    let alpha = diffusivity_of(problem)?;
    let zero = |_: Point| 0.0;
    let f: &dyn Fn(Point) -> f64 = match &problem.coeffs.source {
        Some(src) => src.as_ref(),
        None => &zero,
    };
    Ok(residual_parts(u, f, &alpha)?.indicator(kind))
}

/// Adaptive loop; stops when the global estimate drops below `tol` or after
/// `max_cycles` refinements (then `converged` is false).
pub fn adaptive_loop(problem: &EllipticProblem, opts: AdaptiveOptions) -> Result<AdaptiveResult> {
    adaptive_loop_observed(problem, opts, |_, _, _| Ok(()))
}

/// [`adaptive_loop`] with a callback `(record, solution, indicator)` after every estimate.
pub fn adaptive_loop_observed(
    problem: &EllipticProblem,
    opts: AdaptiveOptions,
    mut observe: impl FnMut(&CycleRecord, &FeFunction, &ErrorIndicator) -> Result<()>,
) -> Result<AdaptiveResult> {
    if problem.kind != ElementKind::P1 {
        return Err(FemError::UnsupportedElement(format!("adaptive loop uses P1 estimators, got {}", problem.kind)));
    }
    let mut current = problem.clone();
    let mut history = Vec::new();
    for cycle in 0..=opts.max_cycles {
        let u = solve_elliptic(&current)?.u;
        let eta = estimate(&current, &u, opts.estimator)?.with_composition(opts.composition);
        let (err_l2, err_h1) = match &current.exact {
            Some(ex) => {
                let e = solution_errors(&u, ex)?;
                (e.l2, e.h1_semi)
            }
            None => (f64::NAN, f64::NAN),
        };
        let record = CycleRecord { cycle, n_dofs: u.coefficients().len(), eta: eta.global(), err_l2, err_h1 };
        info!("cycle {cycle}: {} DOFs, eta = {:.4e}, H1 error = {err_h1:.4e}", record.n_dofs, record.eta);
        observe(&record, &u, &eta)?;
        history.push(record);
        let converged = record.eta < opts.tol;
        if converged || cycle == opts.max_cycles {
            return Ok(AdaptiveResult { solution: u, indicator: eta, history, converged });
        }
        let marked = mark_elements(&eta, opts.marking, opts.theta)?;
        current.mesh = Arc::new(current.mesh.refine_marked(&marked)?);
    }
    unreachable!("the loop returns in its last cycle")
}

/// Errors and residual estimates on uniformly refined meshes
/// `problem.mesh, refine_uniform(..), ...`.
pub fn uniform_history(problem: &EllipticProblem, levels: usize, composition: Composition) -> Result<Vec<CycleRecord>> {
    let mut current = problem.clone();
    let exact = problem
        .exact
        .clone()
        .ok_or_else(|| FemError::InvalidArgument("uniform baseline needs a manufactured solution".into()))?;
    let mut out = Vec::with_capacity(levels);
    for cycle in 0..levels {
        if cycle > 0 {
            current.mesh = Arc::new(current.mesh.refine_uniform()?);
        }
        let u = solve_elliptic(&current)?.u;
        let e = solution_errors(&u, &exact)?;
        let eta = estimate(&current, &u, EstimatorKind::Residual)?.with_composition(composition).global();
        out.push(CycleRecord { cycle, n_dofs: u.coefficients().len(), eta, err_l2: e.l2, err_h1: e.h1_semi });
    }
    Ok(out)
}

/// Log-log interpolation of `(n_dofs, error)` samples at `n`; outside the
/// sampled range the nearest two points are extrapolated.
pub fn interpolate_loglog(samples: &[(usize, f64)], n: usize) -> f64 {
    assert!(samples.len() >= 2, "need two samples");
    let x = (n as f64).ln();
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(d, e)| ((d as f64).ln(), e.ln())).collect();
    let seg = pts.windows(2).position(|w| x <= w[1].0).unwrap_or(pts.len() - 2);
    let (a, b) = (pts[seg], pts[seg + 1]);
    let s = (b.1 - a.1) / (b.0 - a.0);
    (a.1 + s * (x - a.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refelem::interpolate;

    fn eta(v: &[f64]) -> ErrorIndicator {
        ErrorIndicator::new(v.to_vec())
    }

    #[test]
    fn dorfler_example() {
        assert_eq!(mark_elements(&eta(&[4.0, 2.0, 1.0, 1.0]), Marking::Dorfler, 0.5).unwrap(), vec![0]);
    }

    #[test]
    fn max_marking() {
        assert_eq!(mark_elements(&eta(&[1.0; 4]), Marking::Max, 0.5).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(mark_elements(&eta(&[1.0, 3.0, 3.0, 2.0]), Marking::Max, 1.0).unwrap(), vec![1, 2]);
        assert!(mark_elements(&eta(&[]), Marking::Max, 0.5).unwrap().is_empty());
        assert!(mark_elements(&eta(&[1.0]), Marking::Max, 0.0).is_err());
    }

    #[test]
    fn one_d_constant_load() {
        let mesh = Mesh1D::uniform(4).unwrap();
        let e = estimate_residual_1d(&mesh, &[0.0; 5], |_| 1.0).unwrap();
        for v in &e.local {
            assert!((v - 0.25f64.powf(2.5) / 2.0).abs() < 1e-15);
        }
        let z = estimate_residual_1d(&mesh, &[0.0; 5], |_| 0.0).unwrap();
        assert_eq!(z.global(), 0.0);
    }

    #[test]
    fn linear_solution_has_zero_indicator() {
        let mesh = Arc::new(crate::mesh::unit_square_mesh(3).unwrap());
        let u = interpolate(&mesh, ElementKind::P1, |p| 2.0 * p[0] - p[1]).unwrap();
        let e = estimate_residual_2d(&u, &|_| 0.0, &Diffusivity::constant(1.0)).unwrap();
        assert!(e.local.iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn loglog_interpolation() {
        let s = [(10, 1.0), (100, 0.1), (1000, 0.01)];
        assert!((interpolate_loglog(&s, 316) - 10f64.powf(-1.5)).abs() < 1e-3 * 0.0316);
        assert!((interpolate_loglog(&s, 10_000) - 0.001).abs() < 1e-12);
    }
}
