//! Element-by-element assembly of
//! `a(u, v) = (A grad u, grad v) + (b . grad u, v) + (c u, v)`,
//! its load vector, Robin/Neumann boundary terms and Dirichlet rows.
//!
//! Row indices belong to test functions, columns to trial functions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{FemError, Result};
use crate::linalg::{CooBuilder, SparseMatrix};
use crate::mesh::{AffineMap, Mesh, Mesh1D, Point};
use crate::quadrature::{edge_rule_for_degree, triangle_rule_at_least, QuadratureRule};
use crate::refelem::{dof_points, ElementKind, ReferenceElement, Tabulation};

pub use crate::refelem::DofMap;

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type TensorField = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

pub fn scalar(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> ScalarField {
    Arc::new(f)
}

pub fn constant(c: f64) -> ScalarField {
    Arc::new(move |_| c)
}

pub fn vector(f: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> VectorField {
    Arc::new(f)
}

pub fn tensor(f: impl Fn(Point) -> [[f64; 2]; 2] + Send + Sync + 'static) -> TensorField {
    Arc::new(f)
}

/// Boundary condition attached to one boundary tag.
#[derive(Clone)]
pub enum BoundaryCondition {
    /// `u = g`.
    Dirichlet(ScalarField),
    /// `A grad u . n = g`.
    Neumann(ScalarField),
    /// `A grad u . n + d u = g`.
    Robin { d: ScalarField, g: ScalarField },
}

impl BoundaryCondition {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet(_))
    }
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryCondition::Dirichlet(_) => "Dirichlet",
            BoundaryCondition::Neumann(_) => "Neumann",
            BoundaryCondition::Robin { .. } => "Robin",
        })
    }
}

/// Coefficients of the second-order operator and its boundary data.
///
/// Missing coefficients are zero; `boundary` maps tags to conditions.
#[derive(Clone, Default)]
pub struct CoefficientSet {
    pub diffusion: Option<TensorField>,
    pub advection: Option<VectorField>,
    pub reaction: Option<ScalarField>,
    pub source: Option<ScalarField>,
    pub boundary: BTreeMap<u32, BoundaryCondition>,
    /// Analytic gradient of a scalar diffusion `alpha` (used by estimators).
    pub diffusion_gradient: Option<VectorField>,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("diffusion", &self.diffusion.is_some())
            .field("advection", &self.advection.is_some())
            .field("reaction", &self.reaction.is_some())
            .field("source", &self.source.is_some())
            .field("boundary", &self.boundary)
            .finish()
    }
}

impl CoefficientSet {
    /// `-Laplace u = f`, no boundary conditions attached yet.
    pub fn poisson(f: ScalarField) -> Self {
        CoefficientSet { diffusion: Some(tensor(|_| [[1.0, 0.0], [0.0, 1.0]])), source: Some(f), ..Default::default() }
    }

    pub fn with_boundary(mut self, tag: u32, bc: BoundaryCondition) -> Self {
        self.boundary.insert(tag, bc);
        self
    }

    /// Attaches `u = g` to every listed tag.
    pub fn with_dirichlet(mut self, tags: &[u32], g: ScalarField) -> Self {
        for &t in tags {
            self.boundary.insert(t, BoundaryCondition::Dirichlet(g.clone()));
        }
        self
    }

    pub fn dirichlet_tags(&self) -> Vec<u32> {
        self.boundary.iter().filter(|(_, bc)| bc.is_dirichlet()).map(|(&t, _)| t).collect()
    }

    /// True when the bilinear form is symmetric (no first-order term).
    pub fn is_symmetric(&self) -> bool {
        self.advection.is_none()
    }

    /// Checks that `A` is symmetric positive definite at every element centroid.
    pub fn check_ellipticity(&self, mesh: &Mesh) -> Result<()> {
        let Some(a) = &self.diffusion else { return Ok(()) };
        for t in 0..mesh.n_triangles() {
            let m = a(mesh.centroid(t));
            let sym = (m[0][1] - m[1][0]).abs() <= 1e-12 * (m[0][0].abs() + m[1][1].abs()).max(1.0);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if !sym || !(m[0][0] > 0.0 && det > 0.0) {
                return Err(FemError::Configuration(format!(
                    "diffusion tensor {m:?} is not symmetric positive definite in triangle {t}"
                )));
            }
        }
        Ok(())
    }

    /// Fails when a boundary condition names a tag the mesh does not carry.
    pub fn check_tags(&self, mesh: &Mesh) -> Result<()> {
        let tags: BTreeSet<u32> = mesh.boundary_tags().into_iter().collect();
        for tag in self.boundary.keys() {
            if !tags.contains(tag) {
                return Err(FemError::Configuration(format!(
                    "boundary condition for tag {tag}, but the mesh only has tags {tags:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Quadrature order selection for volume integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RulePolicy {
    /// `2k - 2` for pure diffusion, `2k - 1` with advection, `2k` with
    /// reaction or for mass and load; at least 1.
    #[default]
    Default,
    Order(usize),
}

impl RulePolicy {
    fn order(self, natural: usize) -> usize {
        match self {
            RulePolicy::Default => natural.max(1),
            RulePolicy::Order(o) => o.max(1),
        }
    }
}

fn stiffness_order(k: usize, coeffs: &CoefficientSet) -> usize {
    if coeffs.reaction.is_some() {
        2 * k
    } else if coeffs.advection.is_some() {
        (2 * k).saturating_sub(1)
    } else {
        (2 * k).saturating_sub(2)
    }
}

/// Precomputed basis tables for one element kind and rule.
#[derive(Debug, Clone)]
pub struct ElementTables {
    pub reference: ReferenceElement,
    pub rule: QuadratureRule,
    pub points: Vec<Point>,
    pub tab: Tabulation,
}

impl ElementTables {
    pub fn new(kind: ElementKind, order: usize) -> Result<Self> {
        let reference = ReferenceElement::of_kind(kind)?;
        let rule = triangle_rule_at_least(order);
        let tab = reference.tabulate(&rule);
        let points = rule.reference_points().collect();
        Ok(ElementTables { reference, rule, points, tab })
    }
}

/// Local matrix `K[i][j] = a(phi_j, phi_i)` on one triangle.
pub fn local_bilinear(map: &AffineMap, tables: &ElementTables, coeffs: &CoefficientSet) -> Vec<Vec<f64>> {
    let d = tables.reference.num_dofs;
    let mut k = vec![vec![0.0; d]; d];
    let mut g = vec![[0.0; 2]; d];
    for (q, xi) in tables.points.iter().enumerate() {
        let x = map.map(*xi);
        let w = tables.rule.weights[q] * map.det;
        let phi = &tables.tab.values[q];
        for (gi, rg) in g.iter_mut().zip(&tables.tab.grads[q]) {
            *gi = map.transform_gradient(*rg);
        }
        if let Some(a) = &coeffs.diffusion {
            let m = a(x);
            for j in 0..d {
                let ag = [m[0][0] * g[j][0] + m[0][1] * g[j][1], m[1][0] * g[j][0] + m[1][1] * g[j][1]];
                for i in 0..d {
                    k[i][j] += w * (ag[0] * g[i][0] + ag[1] * g[i][1]);
                }
            }
        }
        if let Some(b) = &coeffs.advection {
            let bv = b(x);
            for j in 0..d {
                let bg = bv[0] * g[j][0] + bv[1] * g[j][1];
                for i in 0..d {
                    k[i][j] += w * bg * phi[i];
                }
            }
        }
        if let Some(c) = &coeffs.reaction {
            let cv = c(x);
            for j in 0..d {
                for i in 0..d {
                    k[i][j] += w * cv * phi[j] * phi[i];
                }
            }
        }
    }
    k
}

/// Local mass matrix on one triangle.
pub fn local_mass(map: &AffineMap, tables: &ElementTables) -> Vec<Vec<f64>> {
    let d = tables.reference.num_dofs;
    let mut m = vec![vec![0.0; d]; d];
    for q in 0..tables.points.len() {
        let w = tables.rule.weights[q] * map.det;
        let phi = &tables.tab.values[q];
        for i in 0..d {
            for j in 0..d {
                m[i][j] += w * phi[i] * phi[j];
            }
        }
    }
    m
}

/// Assembles a global matrix from per-triangle blocks.
///
/// With `jobs > 1` the triangles are split into contiguous chunks processed
/// on scoped threads; triplets are merged in triangle order, so the result is
/// bitwise identical for every worker count.
pub fn assemble_matrix<F>(mesh: &Mesh, dofs: &DofMap, jobs: usize, local: F) -> Result<SparseMatrix>
where
    F: Fn(usize) -> Result<Vec<Vec<f64>>> + Sync,
{
    let n = dofs.n_dofs();
    let nt = mesh.n_triangles();
    let d = dofs.local_dofs();
    let chunk = |range: std::ops::Range<usize>| -> Result<CooBuilder> {
        let mut b = CooBuilder::with_capacity(n, n, range.len() * d * d);
        for t in range {
            let block = local(t)?;
            let cell = dofs.cell(t);
            let s = dofs.signs(t);
            for i in 0..d {
                for j in 0..d {
                    b.add(cell[i], cell[j], s[i] * s[j] * block[i][j]);
                }
            }
        }
        Ok(b)
    };
    let jobs = jobs.clamp(1, nt.max(1));
    if jobs == 1 {
        return Ok(chunk(0..nt)?.finalize());
    }
    let size = nt.div_ceil(jobs);
    let parts: Vec<Result<CooBuilder>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let range = (w * size).min(nt)..((w + 1) * size).min(nt);
                let chunk = &chunk;
                s.spawn(move || chunk(range))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("assembly worker panicked")).collect()
    });
    let mut all = CooBuilder::new(n, n);
    for p in parts {
        all.extend(p?);
    }
    Ok(all.finalize())
}

/// Global matrix of `a(u, v)` (volume terms only).
pub fn assemble_stiffness(
    mesh: &Mesh,
    kind: ElementKind,
    coeffs: &CoefficientSet,
    policy: RulePolicy,
) -> Result<SparseMatrix> {
    assemble_stiffness_jobs(mesh, kind, coeffs, policy, 1)
}

pub fn assemble_stiffness_jobs(
    mesh: &Mesh,
    kind: ElementKind,
    coeffs: &CoefficientSet,
    policy: RulePolicy,
    jobs: usize,
) -> Result<SparseMatrix> {
    let tables = ElementTables::new(kind, policy.order(stiffness_order(kind.degree(), coeffs)))?;
    let dofs = DofMap::new(mesh, kind)?;
    assemble_matrix(mesh, &dofs, jobs, |t| Ok(local_bilinear(&mesh.affine_map(t)?, &tables, coeffs)))
}

/// Global mass matrix `(phi_j, phi_i)`.
pub fn assemble_mass(mesh: &Mesh, kind: ElementKind) -> Result<SparseMatrix> {
    let tables = ElementTables::new(kind, 2 * kind.degree())?;
    let dofs = DofMap::new(mesh, kind)?;
    assemble_matrix(mesh, &dofs, 1, |t| Ok(local_mass(&mesh.affine_map(t)?, &tables)))
}

/// Load vector `F_i = (f, phi_i)`.
pub fn assemble_load(mesh: &Mesh, kind: ElementKind, f: &dyn Fn(Point) -> f64, policy: RulePolicy) -> Result<Vec<f64>> {
    let tables = ElementTables::new(kind, policy.order(2 * kind.degree()))?;
    let dofs = DofMap::new(mesh, kind)?;
    let mut load = vec![0.0; dofs.n_dofs()];
    for t in 0..mesh.n_triangles() {
        let map = mesh.affine_map(t)?;
        let cell = dofs.cell(t);
        for (q, xi) in tables.points.iter().enumerate() {
            let w = tables.rule.weights[q] * map.det * f(map.map(*xi));
            for (i, &g) in cell.iter().enumerate() {
                load[g] += w * tables.tab.values[q][i];
            }
        }
    }
    Ok(load)
}

/// Reference coordinates of the point at parameter `s` on local edge `i`,
/// running from vertex `i+1` to vertex `i+2`.
pub fn edge_reference_point(local: usize, s: f64) -> Point {
    const Z: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let (a, b) = (Z[(local + 1) % 3], Z[(local + 2) % 3]);
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Local index of global `face` in triangle `t`.
pub fn local_face_index(mesh: &Mesh, t: usize, face: usize) -> usize {
    mesh.triangle_faces()[t].iter().position(|&f| f == face).expect("face belongs to the triangle")
}

/// Matrix and load increments of the Neumann and Robin conditions:
/// `int d u v ds` and `int g v ds` over the tagged faces.
pub fn assemble_boundary(mesh: &Mesh, kind: ElementKind, coeffs: &CoefficientSet) -> Result<(SparseMatrix, Vec<f64>)> {
    coeffs.check_tags(mesh)?;
    let reference = ReferenceElement::of_kind(kind)?;
    let dofs = DofMap::new(mesh, kind)?;
    let n = dofs.n_dofs();
    let rule = edge_rule_for_degree(2 * kind.degree() + 1);
    let mut mat = CooBuilder::new(n, n);
    let mut load = vec![0.0; n];
    let n_int = mesh.n_interior_faces();
    for (b, face) in mesh.boundary_faces().iter().enumerate() {
        let (d, g) = match coeffs.boundary.get(&face.tag) {
            Some(BoundaryCondition::Neumann(g)) => (None, g),
            Some(BoundaryCondition::Robin { d, g }) => (Some(d), g),
            _ => continue,
        };
        let t = face.triangle;
        let local = local_face_index(mesh, t, n_int + b);
        let map = mesh.affine_map(t)?;
        let len = mesh.face_length(n_int + b);
        let cell = dofs.cell(t);
        for (s, w) in rule.points.iter().zip(&rule.weights) {
            let xi = edge_reference_point(local, *s);
            let x = map.map(xi);
            let phi = reference.eval(xi);
            let wl = w * len;
            let gv = g(x);
            for (i, &gi) in cell.iter().enumerate() {
                load[gi] += wl * gv * phi[i];
            }
            if let Some(d) = d {
                let dv = d(x);
                for (i, &gi) in cell.iter().enumerate() {
                    for (j, &gj) in cell.iter().enumerate() {
                        if phi[i] != 0.0 && phi[j] != 0.0 {
                            mat.add(gi, gj, wl * dv * phi[i] * phi[j]);
                        }
                    }
                }
            }
        }
    }
    Ok((mat.finalize(), load))
}

/// Dirichlet DOFs of the tags carrying `Dirichlet` conditions, with the
/// prescribed values, sorted by DOF index.
pub fn dirichlet_values(mesh: &Mesh, kind: ElementKind, coeffs: &CoefficientSet) -> Result<Vec<(usize, f64)>> {
    coeffs.check_tags(mesh)?;
    let pts = dof_points(mesh, kind)?;
    let mut fixed = BTreeMap::new();
    let n_int = mesh.n_interior_faces();
    for (b, face) in mesh.boundary_faces().iter().enumerate() {
        let Some(BoundaryCondition::Dirichlet(g)) = coeffs.boundary.get(&face.tag) else { continue };
        let mut on_face: Vec<usize> = match kind {
            ElementKind::P1 => face.nodes.to_vec(),
            ElementKind::P2 => vec![face.nodes[0], face.nodes[1], mesh.n_nodes() + n_int + b],
            other => {
                return Err(FemError::UnsupportedElement(format!(
                    "strong Dirichlet conditions need a continuous Lagrange element, got {other}"
                )))
            }
        };
        for dof in on_face.drain(..) {
            fixed.entry(dof).or_insert_with(|| g(pts[dof]));
        }
    }
    Ok(fixed.into_iter().collect())
}

/// Row replacement: every Dirichlet row becomes `e_k^T` with `F_k = g_k`.
pub fn apply_dirichlet(k: &SparseMatrix, f: &[f64], fixed: &[(usize, f64)]) -> (SparseMatrix, Vec<f64>) {
    let mut mask = vec![false; k.rows()];
    let mut rhs = f.to_vec();
    for &(dof, v) in fixed {
        mask[dof] = true;
        rhs[dof] = v;
    }
    (k.with_identity_rows(&mask), rhs)
}

/// System restricted to the free DOFs, with the Dirichlet values moved to
/// the right-hand side.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Free DOF indices in increasing order.
    pub free: Vec<usize>,
    /// Full-length vector holding the Dirichlet values (zero elsewhere).
    pub lift: Vec<f64>,
}

impl ReducedSystem {
    pub fn new(k: &SparseMatrix, f: &[f64], fixed: &[(usize, f64)]) -> Self {
        let n = k.rows();
        let mut lift = vec![0.0; n];
        let mut is_fixed = vec![false; n];
        for &(dof, v) in fixed {
            lift[dof] = v;
            is_fixed[dof] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
        let k_lift = k.matvec(&lift);
        let rhs = free.iter().map(|&i| f[i] - k_lift[i]).collect();
        let matrix = k.submatrix(&free, &free);
        ReducedSystem { matrix, rhs, free, lift }
    }

    /// Full vector from free-DOF values.
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut u = self.lift.clone();
        for (&i, &v) in self.free.iter().zip(free_values) {
            u[i] = v;
        }
        u
    }

    /// Restriction of a full vector to the free DOFs.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }
}

/// 1D element stiffness `(1/h) [[1, -1], [-1, 1]]`.
pub fn element_stiffness_1d(h: f64) -> [[f64; 2]; 2] {
    [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]]
}

/// 1D element mass `(h/6) [[2, 1], [1, 2]]`.
pub fn element_mass_1d(h: f64) -> [[f64; 2]; 2] {
    [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]]
}

/// Global 1D stiffness and mass matrices of the linear element.
pub fn assemble_1d(mesh: &Mesh1D) -> (SparseMatrix, SparseMatrix) {
    let n = mesh.nodes().len();
    let mut k = CooBuilder::new(n, n);
    let mut m = CooBuilder::new(n, n);
    for e in 0..mesh.n_elements() {
        let h = mesh.h(e);
        let (ke, me) = (element_stiffness_1d(h), element_mass_1d(h));
        for a in 0..2 {
            for b in 0..2 {
                k.add(e + a, e + b, ke[a][b]);
                m.add(e + a, e + b, me[a][b]);
            }
        }
    }
    (k.finalize(), m.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    fn reference_triangle() -> Mesh {
        Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], &[]).unwrap()
    }

    #[test]
    fn reference_laplace_block() {
        let tables = ElementTables::new(ElementKind::P1, 1).unwrap();
        let k = local_bilinear(&AffineMap::identity(), &tables, &CoefficientSet::poisson(constant(0.0)));
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reference_mass_block_via_reaction() {
        let coeffs = CoefficientSet { reaction: Some(constant(1.0)), ..Default::default() };
        let mesh = reference_triangle();
        let k = assemble_stiffness(&mesh, ElementKind::P1, &coeffs, RulePolicy::Default).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                // node order of the mesh may be rotated; compare with the invariant form
                let expect = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
                assert!((k.get(i, j) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mass_entries_sum_to_area() {
        let mesh = unit_square_mesh(4).unwrap();
        for kind in [ElementKind::P1, ElementKind::P2] {
            let m = assemble_mass(&mesh, kind).unwrap();
            let total: f64 = m.values().iter().sum();
            assert!((total - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn unit_load_sums_to_area() {
        let mesh = unit_square_mesh(3).unwrap();
        let f = assemble_load(&mesh, ElementKind::P1, &|_| 1.0, RulePolicy::Default).unwrap();
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let z = assemble_load(&mesh, ElementKind::P1, &|_| 0.0, RulePolicy::Default).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn neumann_perimeter() {
        let mesh = unit_square_mesh(3).unwrap();
        let mut coeffs = CoefficientSet::poisson(constant(0.0));
        for tag in 1..=4 {
            coeffs = coeffs.with_boundary(tag, BoundaryCondition::Neumann(constant(1.0)));
        }
        let (m, f) = assemble_boundary(&mesh, ElementKind::P1, &coeffs).unwrap();
        assert!((f.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn robin_edge_block() {
        let mesh = unit_square_mesh(1).unwrap();
        let coeffs =
            CoefficientSet::default().with_boundary(1, BoundaryCondition::Robin { d: constant(1.0), g: constant(0.0) });
        let (m, _) = assemble_boundary(&mesh, ElementKind::P1, &coeffs).unwrap();
        // bottom edge joins nodes 0 and 1
        assert!((m.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.get(0, 1) - 1.0 / 6.0).abs() < 1e-15);
        assert!((m.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_tag_is_configuration_error() {
        let mesh = unit_square_mesh(1).unwrap();
        let coeffs = CoefficientSet::default().with_boundary(9, BoundaryCondition::Neumann(constant(1.0)));
        assert!(matches!(assemble_boundary(&mesh, ElementKind::P1, &coeffs), Err(FemError::Configuration(_))));
    }

    #[test]
    fn one_d_golden_blocks() {
        let h = 0.25;
        assert_eq!(element_stiffness_1d(h), [[4.0, -4.0], [-4.0, 4.0]]);
        assert_eq!(element_mass_1d(h), [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]]);
        let (k, _) = assemble_1d(&Mesh1D::uniform(4).unwrap());
        assert_eq!(k.get(1, 1), 8.0);
        assert_eq!(k.get(0, 2), 0.0);
    }

    #[test]
    fn parallel_assembly_is_bitwise_identical() {
        let mesh = unit_square_mesh(6).unwrap();
        let coeffs = CoefficientSet::poisson(constant(1.0));
        let a = assemble_stiffness_jobs(&mesh, ElementKind::P2, &coeffs, RulePolicy::Default, 1).unwrap();
        let b = assemble_stiffness_jobs(&mesh, ElementKind::P2, &coeffs, RulePolicy::Default, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dirichlet_rows_replaced() {
        let mesh = unit_square_mesh(2).unwrap();
        let coeffs = CoefficientSet::poisson(constant(1.0)).with_dirichlet(&[1], constant(2.0));
        let k = assemble_stiffness(&mesh, ElementKind::P1, &coeffs, RulePolicy::Default).unwrap();
        let f = assemble_load(&mesh, ElementKind::P1, &|_| 1.0, RulePolicy::Default).unwrap();
        let fixed = dirichlet_values(&mesh, ElementKind::P1, &coeffs).unwrap();
        assert_eq!(fixed.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        let (kd, fd) = apply_dirichlet(&k, &f, &fixed);
        assert_eq!(kd.row(0).0, &[0]);
        assert_eq!(fd[0], 2.0);
    }
}
