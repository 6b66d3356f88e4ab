//! Discontinuous Galerkin methods on triangles: advection-reaction with
//! centered or upwind fluxes, and the symmetric interior penalty method for
//! the Poisson problem.
//!
//! Every triangle owns a private block of `dim P_k` DOFs. On a face with
//! adjacent triangles `K1` (left) and `K2` (right) the normal `nu` points from
//! `K1` into `K2`, the jump is `[w] = w|K1 - w|K2` and the average is
//! `{w} = (w|K1 + w|K2) / 2`. On boundary faces the function is extended by
//! zero in the jump and the average is the one-sided trace.

use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use log::{debug, warn};

use crate::assembly::{assemble_load, assemble_matrix, ElementTables, RulePolicy, ScalarField, VectorField};
use crate::error::{FemError, Result};
use crate::linalg::{
    cg_solve, energy_norms, is_positive_definite, lu_solve, norm2, residual_norm, CgOptions, CooBuilder, SparseMatrix,
};
use crate::mesh::{unit_square_mesh, AffineMap, Mesh, Point};
use crate::problems::{AdvectionProblem, Manufactured};
use crate::quadrature::{edge_rule_for_degree, triangle_rule_at_least};
use crate::refelem::{DofMap, ElementKind, FeFunction, ReferenceElement};
use crate::study::RateTable;

/// Piecewise polynomials of degree `k` without inter-element continuity.
#[derive(Debug, Clone)]
pub struct DgSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    reference: ReferenceElement,
    dofs: DofMap,
    jobs: usize,
}

impl DgSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        let reference = ReferenceElement::lagrange(degree)?;
        let dofs = DofMap::new(&mesh, ElementKind::Dg(degree))?;
        Ok(DgSpace { mesh, degree, reference, dofs, jobs: 1 })
    }

    /// Number of worker threads for the volume assembly.
    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn kind(&self) -> ElementKind {
        ElementKind::Dg(self.degree)
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs()
    }

    pub fn local_dofs(&self) -> usize {
        self.reference.num_dofs
    }

    /// Global DOF range of triangle `t`.
    pub fn block(&self, t: usize) -> Range<usize> {
        let d = self.local_dofs();
        t * d..(t + 1) * d
    }

    /// Edge quadrature exact for products of two `P_k` traces times a linear.
    fn face_rule_degree(&self) -> usize {
        2 * self.degree + 1
    }

    pub fn face(&self, face: usize) -> Result<FaceContext> {
        FaceContext::new(self, face)
    }
}

/// Basis traces of one triangle at the face quadrature points.
#[derive(Debug, Clone)]
pub struct FaceSide {
    pub triangle: usize,
    pub map: AffineMap,
    /// `values[q][i]` of basis function `i` at point `q`.
    pub values: Vec<Vec<f64>>,
    /// Physical gradients `grads[q][i]`.
    pub grads: Vec<Vec<[f64; 2]>>,
}

/// Geometry and basis traces of one face.
#[derive(Debug, Clone)]
pub struct FaceContext {
    pub face: usize,
    /// Face length `h_F`.
    pub h: f64,
    /// Unit normal pointing out of `k1`.
    pub normal: Point,
    pub points: Vec<Point>,
    /// Physical quadrature weights (they sum to `h`).
    pub weights: Vec<f64>,
    pub k1: FaceSide,
    pub k2: Option<FaceSide>,
}

impl FaceContext {
    fn new(space: &DgSpace, face: usize) -> Result<Self> {
        let mesh = &space.mesh;
        let [a, b] = mesh.face_nodes(face);
        let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
        let h = mesh.face_length(face);
        let rule = edge_rule_for_degree(space.face_rule_degree());
        let points: Vec<Point> =
            rule.points.iter().map(|&s| [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]).collect();
        let weights = rule.weights.iter().map(|w| w * h).collect();
        let side = |t: usize| -> Result<FaceSide> {
            let map = mesh.affine_map(t)?;
            let xis: Vec<Point> = points.iter().map(|&x| map.inverse(x)).collect();
            let values = xis.iter().map(|&xi| space.reference.eval(xi)).collect();
            let grads = xis
                .iter()
                .map(|&xi| space.reference.grad(xi).into_iter().map(|g| map.transform_gradient(g)).collect())
                .collect();
            Ok(FaceSide { triangle: t, map, values, grads })
        };
        let (t1, t2) = mesh.face_triangles(face);
        let k1 = side(t1)?;
        let k2 = t2.map(side).transpose()?;
        Ok(FaceContext { face, h, normal: mesh.face_normal(face), points, weights, k1, k2 })
    }

    pub fn is_boundary(&self) -> bool {
        self.k2.is_none()
    }

    /// Global DOFs of the coupled blocks: `K1` first, then `K2`.
    pub fn dofs(&self, space: &DgSpace) -> Vec<usize> {
        let mut d: Vec<usize> = space.block(self.k1.triangle).collect();
        if let Some(k2) = &self.k2 {
            d.extend(space.block(k2.triangle));
        }
        d
    }

    /// Jump `[phi_a]` of every coupled basis function at point `q`.
    fn basis_jumps(&self, q: usize) -> Vec<f64> {
        let mut j = self.k1.values[q].clone();
        if let Some(k2) = &self.k2 {
            j.extend(k2.values[q].iter().map(|v| -v));
        }
        j
    }

    /// Average `{phi_a}` of every coupled basis function at point `q`.
    fn basis_averages(&self, q: usize) -> Vec<f64> {
        match &self.k2 {
            None => self.k1.values[q].clone(),
            Some(k2) => self.k1.values[q].iter().chain(&k2.values[q]).map(|v| 0.5 * v).collect(),
        }
    }

    /// Average normal derivative `{grad phi_a} . nu` at point `q`.
    fn basis_normal_derivatives(&self, q: usize) -> Vec<f64> {
        let n = self.normal;
        let dn = |g: &[f64; 2]| g[0] * n[0] + g[1] * n[1];
        match &self.k2 {
            None => self.k1.grads[q].iter().map(dn).collect(),
            Some(k2) => self.k1.grads[q].iter().chain(&k2.grads[q]).map(|g| 0.5 * dn(g)).collect(),
        }
    }

    /// Traces of `u` from both sides at the quadrature points.
    pub fn traces(&self, space: &DgSpace, u: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
        let eval = |side: &FaceSide| -> Vec<f64> {
            let block = &u[space.block(side.triangle)];
            side.values.iter().map(|phi| phi.iter().zip(block).map(|(p, c)| p * c).sum()).collect()
        };
        (eval(&self.k1), self.k2.as_ref().map(eval))
    }
}

/// `[w] = w1 - w2`; `w2 = None` means a boundary face (zero extension).
pub fn jump(w1: f64, w2: Option<f64>) -> f64 {
    w1 - w2.unwrap_or(0.0)
}

/// `{w} = (w1 + w2) / 2`, the one-sided trace on boundary faces.
pub fn average(w1: f64, w2: Option<f64>) -> f64 {
    match w2 {
        Some(w2) => 0.5 * (w1 + w2),
        None => w1,
    }
}

/// Matrix and right-hand side of a discrete problem.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

/// Numerical flux of the advection term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Flux {
    Centered,
    #[default]
    Upwind,
}

impl FromStr for Flux {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "centered" | "centred" => Ok(Flux::Centered),
            "upwind" => Ok(Flux::Upwind),
            other => Err(FemError::InvalidArgument(format!("unknown flux '{other}'; expected 'centered' or 'upwind'"))),
        }
    }
}

/// Data of `mu u + beta . grad u = f` with `u = g` on the inflow boundary.
#[derive(Clone)]
pub struct AdvectionData {
    pub beta: VectorField,
    pub mu: f64,
    pub f: ScalarField,
    /// Inflow data; zero when `None`.
    pub inflow: Option<ScalarField>,
}

impl AdvectionData {
    pub fn from_problem(p: &AdvectionProblem) -> Self {
        AdvectionData { beta: p.beta.clone(), mu: p.mu, f: p.exact.f.clone(), inflow: Some(p.exact.u.clone()) }
    }

    /// `mu_0 = min_K (mu - div(beta)/2)` sampled at the centroids, with
    /// `div(beta)` by central differences.
    pub fn coercivity_constant(&self, mesh: &Mesh) -> f64 {
        let b = &self.beta;
        (0..mesh.n_triangles())
            .map(|t| {
                let x = mesh.centroid(t);
                let h = 1e-6 * mesh.diameter_of(t);
                let div = (b([x[0] + h, x[1]])[0] - b([x[0] - h, x[1]])[0] + b([x[0], x[1] + h])[1]
                    - b([x[0], x[1] - h])[1])
                    / (2.0 * h);
                self.mu - 0.5 * div
            })
            .fold(f64::INFINITY, f64::min)
    }
}

const INFLOW_TOL: f64 = 1e-14;

fn is_inflow(beta: &VectorField, mesh: &Mesh, face: usize) -> bool {
    let n = mesh.face_normal(face);
    let b = beta(mesh.face_midpoint(face));
    let bn = b[0] * n[0] + b[1] * n[1];
    if bn.abs() <= INFLOW_TOL {
        debug!("boundary face {face}: beta . nu = {bn:e}, treated as outflow");
    }
    bn < -INFLOW_TOL
}

fn scatter(builder: &mut CooBuilder, dofs: &[usize], block: &[Vec<f64>]) {
    for (i, &gi) in dofs.iter().enumerate() {
        for (j, &gj) in dofs.iter().enumerate() {
            if block[i][j] != 0.0 {
                builder.add(gi, gj, block[i][j]);
            }
        }
    }
}

/// Volume terms `(mu u + beta . grad u, v)` of the advection form.
fn advection_volume(space: &DgSpace, data: &AdvectionData) -> Result<SparseMatrix> {
    let mesh = &space.mesh;
    let tables = ElementTables::new(space.kind(), 2 * space.degree + 1)?;
    let d = space.local_dofs();
    let dofs = DofMap::new(mesh, space.kind())?;
    assemble_matrix(mesh, &dofs, space.jobs, |t| {
        let map = mesh.affine_map(t)?;
        let mut k = vec![vec![0.0; d]; d];
        for (q, xi) in tables.points.iter().enumerate() {
            let x = map.map(*xi);
            let w = tables.rule.weights[q] * map.det;
            let b = (data.beta)(x);
            let phi = &tables.tab.values[q];
            for j in 0..d {
                let g = map.transform_gradient(tables.tab.grads[q][j]);
                let trial = data.mu * phi[j] + b[0] * g[0] + b[1] * g[1];
                for i in 0..d {
                    k[i][j] += w * trial * phi[i];
                }
            }
        }
        Ok(k)
    })
}

/// DG advection-reaction system
///
/// `a_h(u, v) = (mu u + beta . grad_h u, v) + int_{inflow} |beta . nu| u v
///            - sum_F int_F (beta . nu) [u] {v}
///            + sum_F int_F (eta / 2) |beta . nu| [u] [v]`   (upwind only)
///
/// with the interior faces `F`, and right-hand side
/// `(f, v) + int_{inflow} |beta . nu| g v`.
pub fn assemble_dg_advection(space: &DgSpace, data: &AdvectionData, flux: Flux, eta: f64) -> Result<LinearSystem> {
    if flux == Flux::Upwind && eta < 0.0 {
        return Err(FemError::InvalidArgument(format!("upwind penalty must be non-negative, got {eta}")));
    }
    let mesh = &space.mesh;
    let n = space.n_dofs();
    let volume = advection_volume(space, data)?;
    let mut rhs = assemble_load(mesh, space.kind(), &|x| (data.f)(x), RulePolicy::Order(2 * space.degree + 2))?;
    let mut faces = CooBuilder::new(n, n);
    for face in 0..mesh.n_faces() {
        let ctx = space.face(face)?;
        let dofs = ctx.dofs(space);
        let m = dofs.len();
        let mut block = vec![vec![0.0; m]; m];
        if ctx.is_boundary() {
            if !is_inflow(&data.beta, mesh, face) {
                continue;
            }
            for (q, &x) in ctx.points.iter().enumerate() {
                let b = (data.beta)(x);
                let bn = (b[0] * ctx.normal[0] + b[1] * ctx.normal[1]).abs();
                let w = ctx.weights[q] * bn;
                let phi = &ctx.k1.values[q];
                let g = data.inflow.as_ref().map_or(0.0, |g| g(x));
                for i in 0..m {
                    rhs[dofs[i]] += w * g * phi[i];
                    for j in 0..m {
                        block[i][j] += w * phi[j] * phi[i];
                    }
                }
            }
        } else {
            for (q, &x) in ctx.points.iter().enumerate() {
                let b = (data.beta)(x);
                let bn = b[0] * ctx.normal[0] + b[1] * ctx.normal[1];
                let jumps = ctx.basis_jumps(q);
                let avgs = ctx.basis_averages(q);
                let w = ctx.weights[q];
                let penalty = match flux {
                    Flux::Centered => 0.0,
                    Flux::Upwind => 0.5 * eta * bn.abs(),
                };
                for i in 0..m {
                    for j in 0..m {
                        block[i][j] += w * (-bn * jumps[j] * avgs[i] + penalty * jumps[j] * jumps[i]);
                    }
                }
            }
        }
        scatter(&mut faces, &dofs, &block);
    }
    let matrix = volume.add_scaled(1.0, &faces.finalize(), 1.0)?;
    Ok(LinearSystem { matrix, rhs })
}

/// Solves the DG advection-reaction problem with the direct solver.
pub fn solve_dg_advection(space: &DgSpace, data: &AdvectionData, flux: Flux, eta: f64) -> Result<FeFunction> {
    let mu0 = data.coercivity_constant(&space.mesh);
    if mu0 <= 0.0 {
        warn!("mu - div(beta)/2 = {mu0:.3e} is not positive; the DG scheme may be unstable");
    }
    let sys = assemble_dg_advection(space, data, flux, eta)?;
    let u = lu_solve(&sys.matrix, &sys.rhs)?;
    let res = residual_norm(&sys.matrix, &u, &sys.rhs) / norm2(&sys.rhs).max(f64::MIN_POSITIVE);
    debug!("dg advection: {} DOFs, relative residual {res:.2e}", u.len());
    FeFunction::new(Arc::clone(&space.mesh), space.kind(), u)
}

/// `||u - u_h||_dg` with `||w||_dg^2 = mu_0 ||w||^2 + 1/2 int_{boundary} |beta . nu| w^2`.
pub fn advection_dg_error(space: &DgSpace, data: &AdvectionData, uh: &FeFunction, u: &ScalarField) -> Result<f64> {
    let mesh = &space.mesh;
    let mu0 = data.coercivity_constant(mesh);
    let l2 = energy_norms(uh, |x| u(x), |_| [0.0, 0.0])?.l2;
    let mut boundary = 0.0;
    for face in mesh.n_interior_faces()..mesh.n_faces() {
        let ctx = space.face(face)?;
        let (tr, _) = ctx.traces(space, uh.coefficients());
        for (q, &x) in ctx.points.iter().enumerate() {
            let b = (data.beta)(x);
            let bn = (b[0] * ctx.normal[0] + b[1] * ctx.normal[1]).abs();
            boundary += ctx.weights[q] * bn * (u(x) - tr[q]).powi(2);
        }
    }
    Ok((mu0 * l2 * l2 + 0.5 * boundary).sqrt())
}

/// Data of `-Laplace u = f` with `u = g` on the boundary, imposed weakly.
#[derive(Clone)]
pub struct SipData {
    pub f: ScalarField,
    /// Boundary values; zero when `None`.
    pub g: Option<ScalarField>,
}

impl SipData {
    pub fn from_manufactured(m: &Manufactured) -> Self {
        SipData { f: m.f.clone(), g: Some(m.u.clone()) }
    }
}

/// Default penalty `10 k^2` (`10` for `k = 0`).
pub fn default_sip_penalty(degree: usize) -> f64 {
    10.0 * (degree.max(1) * degree.max(1)) as f64
}

/// Symmetric interior penalty system
///
/// `a_h(u, v) = (grad_h u, grad_h v)
///            - sum_F int_F ([u] {grad_h v . nu} + {grad_h u . nu} [v])
///            + sum_F (eta / h_F) int_F [u] [v]`
///
/// over all faces (boundary faces with the zero extension), and right-hand
/// side `(f, v) - int_{boundary} g grad v . nu + (eta / h_F) int_{boundary} g v`.
pub fn assemble_sip(space: &DgSpace, data: &SipData, eta: f64) -> Result<LinearSystem> {
    if eta <= 0.0 {
        return Err(FemError::InvalidArgument(format!("SIP penalty must be positive, got {eta}")));
    }
    let mesh = &space.mesh;
    let n = space.n_dofs();
    let kind = space.kind();
    let tables = ElementTables::new(kind, (2 * space.degree).saturating_sub(2))?;
    let d = space.local_dofs();
    let dofs = DofMap::new(mesh, kind)?;
    let volume = assemble_matrix(mesh, &dofs, space.jobs, |t| {
        let map = mesh.affine_map(t)?;
        let mut k = vec![vec![0.0; d]; d];
        for (q, grads) in tables.tab.grads.iter().enumerate() {
            let w = tables.rule.weights[q] * map.det;
            let g: Vec<[f64; 2]> = grads.iter().map(|&r| map.transform_gradient(r)).collect();
            for i in 0..d {
                for j in 0..d {
                    k[i][j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        Ok(k)
    })?;
    let mut rhs = assemble_load(mesh, kind, &|x| (data.f)(x), RulePolicy::Order(2 * space.degree + 2))?;
    let mut faces = CooBuilder::new(n, n);
    for face in 0..mesh.n_faces() {
        let ctx = space.face(face)?;
        let fd = ctx.dofs(space);
        let m = fd.len();
        let sigma = eta / ctx.h;
        let mut block = vec![vec![0.0; m]; m];
        for q in 0..ctx.points.len() {
            let jumps = ctx.basis_jumps(q);
            let dn = ctx.basis_normal_derivatives(q);
            let w = ctx.weights[q];
            for i in 0..m {
                for j in 0..m {
                    block[i][j] += w * (-jumps[j] * dn[i] - dn[j] * jumps[i] + sigma * jumps[j] * jumps[i]);
                }
            }
            if ctx.is_boundary() {
                if let Some(g) = &data.g {
                    let gv = g(ctx.points[q]);
                    for i in 0..m {
                        rhs[fd[i]] += w * gv * (sigma * jumps[i] - dn[i]);
                    }
                }
            }
        }
        scatter(&mut faces, &fd, &block);
    }
    let matrix = volume.add_scaled(1.0, &faces.finalize(), 1.0)?;
    Ok(LinearSystem { matrix, rhs })
}

/// Solves the SIP system by conjugate gradients.
pub fn solve_sip(space: &DgSpace, data: &SipData, eta: f64) -> Result<FeFunction> {
    let sys = assemble_sip(space, data, eta)?;
    let out = cg_solve(&sys.matrix, &sys.rhs, CgOptions { tol: 1e-12, max_iter: None }).map_err(|e| match e {
        FemError::Numeric(_) | FemError::NoConvergence { .. } => FemError::Configuration(format!(
            "SIP solve failed with penalty eta = {eta} ({e}); the penalty is probably too small, \
             try eta >= {}",
            default_sip_penalty(space.degree)
        )),
        other => other,
    })?;
    debug!("sip: {} DOFs, {} CG iterations", out.x.len(), out.iterations);
    FeFunction::new(Arc::clone(&space.mesh), space.kind(), out.x)
}

/// Errors of a SIP solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SipErrors {
    /// `(||grad_h e||^2 + sum_F h_F^{-1} ||[e]||_F^2)^{1/2}`.
    pub energy: f64,
    pub l2: f64,
}

/// Energy and L2 errors against a manufactured solution.
pub fn sip_errors(space: &DgSpace, uh: &FeFunction, exact: &Manufactured) -> Result<SipErrors> {
    let vol = energy_norms(uh, |x| (exact.u)(x), |x| (exact.grad)(x))?;
    let mesh = &space.mesh;
    let mut jumps = 0.0;
    for face in 0..mesh.n_faces() {
        let ctx = space.face(face)?;
        let (t1, t2) = ctx.traces(space, uh.coefficients());
        for (q, &x) in ctx.points.iter().enumerate() {
            let u = (exact.u)(x);
            // the exact solution is continuous and equals g outside the mesh trace
            let e1 = u - t1[q];
            let e2 = t2.as_ref().map(|t| u - t[q]);
            let j = match e2 {
                Some(e2) => jump(e1, Some(e2)),
                None => e1,
            };
            jumps += ctx.weights[q] * j * j / ctx.h;
        }
    }
    Ok(SipErrors { energy: (vol.h1_semi.powi(2) + jumps).sqrt(), l2: vol.l2 })
}

/// `L2` norm of the jump of `u` on every face (boundary faces: of the trace).
pub fn face_jumps(space: &DgSpace, u: &FeFunction) -> Result<Vec<f64>> {
    (0..space.mesh.n_faces())
        .map(|face| {
            let ctx = space.face(face)?;
            let (t1, t2) = ctx.traces(space, u.coefficients());
            let s: f64 =
                (0..ctx.points.len()).map(|q| ctx.weights[q] * jump(t1[q], t2.as_ref().map(|t| t[q])).powi(2)).sum();
            Ok(s.sqrt())
        })
        .collect()
}

/// Dense copy of the SIP matrix is positive definite (desk-scale check).
pub fn sip_is_coercive(space: &DgSpace, eta: f64) -> Result<bool> {
    let data = SipData { f: Arc::new(|_| 0.0), g: None };
    let sys = assemble_sip(space, &data, eta)?;
    Ok(is_positive_definite(&sys.matrix.to_dense()))
}

/// Smallest candidate penalty, in increasing order, for which the SIP
/// matrix is positive definite.
pub fn min_coercive_penalty(space: &DgSpace, candidates: &[f64]) -> Result<Option<f64>> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    for eta in sorted {
        if eta > 0.0 && sip_is_coercive(space, eta)? {
            return Ok(Some(eta));
        }
    }
    Ok(None)
}

/// Rates of the DG advection scheme on `unit_square_mesh(n)` for each `n`;
/// columns `dg` and `l2`.
pub fn advection_study(
    levels: &[usize],
    degree: usize,
    flux: Flux,
    eta: f64,
    problem: &AdvectionProblem,
) -> Result<RateTable> {
    RateTable::check_levels(levels.len())?;
    let data = AdvectionData::from_problem(problem);
    let mut table = RateTable::new(&["dg", "l2"]);
    for &n in levels {
        let space = DgSpace::new(Arc::new(unit_square_mesh(n)?), degree)?;
        let uh = solve_dg_advection(&space, &data, flux, eta)?;
        let dg = advection_dg_error(&space, &data, &uh, &problem.exact.u)?;
        let l2 = energy_norms(&uh, |x| (problem.exact.u)(x), |_| [0.0, 0.0])?.l2;
        table.push(space.mesh.h_max(), space.n_dofs(), vec![dg, l2]);
    }
    Ok(table)
}

/// Rates of the SIP method on `unit_square_mesh(n)`; columns `energy` and `l2`.
pub fn sip_study(levels: &[usize], degree: usize, eta: f64, exact: &Manufactured) -> Result<RateTable> {
    RateTable::check_levels(levels.len())?;
    let data = SipData::from_manufactured(exact);
    let mut table = RateTable::new(&["energy", "l2"]);
    for &n in levels {
        let space = DgSpace::new(Arc::new(unit_square_mesh(n)?), degree)?;
        let uh = solve_sip(&space, &data, eta)?;
        let e = sip_errors(&space, &uh, exact)?;
        table.push(space.mesh.h_max(), space.n_dofs(), vec![e.energy, e.l2]);
    }
    Ok(table)
}

/// Volume integral of `u^2` per element; used by tests and norms.
pub fn cell_l2_squared(space: &DgSpace, u: &[f64]) -> Result<Vec<f64>> {
    let rule = triangle_rule_at_least(2 * space.degree);
    let tab = space.reference.tabulate(&rule);
    (0..space.mesh.n_triangles())
        .map(|t| {
            let map = space.mesh.affine_map(t)?;
            let block = &u[space.block(t)];
            Ok(rule
                .weights
                .iter()
                .zip(&tab.values)
                .map(|(w, phi)| {
                    let v: f64 = phi.iter().zip(block).map(|(p, c)| p * c).sum();
                    w * map.det * v * v
                })
                .sum())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{scalar, vector};
    use crate::refelem::interpolate;

    fn space(n: usize, k: usize) -> DgSpace {
        DgSpace::new(Arc::new(unit_square_mesh(n).unwrap()), k).unwrap()
    }

    #[test]
    fn private_blocks() {
        let s = space(3, 2);
        assert_eq!(s.n_dofs(), 18 * 6);
        assert_eq!(s.block(2), 12..18);
    }

    #[test]
    fn face_normal_orientation() {
        let s = space(2, 1);
        let mesh = s.mesh();
        for face in 0..mesh.n_interior_faces() {
            let ctx = s.face(face).unwrap();
            let c1 = mesh.centroid(ctx.k1.triangle);
            let c2 = mesh.centroid(ctx.k2.as_ref().unwrap().triangle);
            let d = [c2[0] - c1[0], c2[1] - c1[1]];
            assert!(d[0] * ctx.normal[0] + d[1] * ctx.normal[1] > 0.0);
            assert!((ctx.weights.iter().sum::<f64>() - ctx.h).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_advection_solution_exact() {
        // beta = (1, 0), mu = 1, u = x: inflow data is zero on x = 0
        let s = space(4, 1);
        let data = AdvectionData { beta: vector(|_| [1.0, 0.0]), mu: 1.0, f: scalar(|p| 1.0 + p[0]), inflow: None };
        for flux in [Flux::Centered, Flux::Upwind] {
            let u = solve_dg_advection(&s, &data, flux, 1.0).unwrap();
            let exact = interpolate(s.mesh(), s.kind(), |p| p[0]).unwrap();
            for (a, b) in u.coefficients().iter().zip(exact.coefficients()) {
                assert!((a - b).abs() < 1e-10, "{flux:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_function_has_no_jumps() {
        let s = space(3, 1);
        let u = interpolate(s.mesh(), s.kind(), |_| 2.5).unwrap();
        let jumps = face_jumps(&s, &u).unwrap();
        assert!(jumps[..s.mesh().n_interior_faces()].iter().all(|j| j.abs() < 1e-14));
    }

    #[test]
    fn sip_matrix_symmetric_and_linear_exact() {
        let s = space(3, 1);
        let g = scalar(|p| 1.0 + 2.0 * p[0] - p[1]);
        let data = SipData { f: scalar(|_| 0.0), g: Some(g.clone()) };
        let sys = assemble_sip(&s, &data, 10.0).unwrap();
        assert!(sys.matrix.symmetry_deviation() < 1e-12);
        let u = solve_sip(&s, &data, 10.0).unwrap();
        let exact = interpolate(s.mesh(), s.kind(), |p| g(p)).unwrap();
        for (a, b) in u.coefficients().iter().zip(exact.coefficients()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn small_penalty_gives_actionable_error() {
        let s = space(4, 1);
        let data = SipData { f: scalar(|_| 1.0), g: None };
        match solve_sip(&s, &data, 0.01) {
            Err(FemError::Configuration(msg)) => assert!(msg.contains("eta")),
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }

    #[test]
    fn flux_parses() {
        assert_eq!("Upwind".parse::<Flux>().unwrap(), Flux::Upwind);
        assert!("godunov".parse::<Flux>().is_err());
    }
}
