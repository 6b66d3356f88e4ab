//! Reference elements, degree-of-freedom maps and finite element functions.
//!
//! The reference triangle is `conv{(0,0), (1,0), (0,1)}` with barycentric
//! coordinates `l0 = 1 - xi1 - xi2`, `l1 = xi1`, `l2 = xi2`. Quadratic
//! elements put local DOF `3 + i` at the midpoint of the edge opposite
//! vertex `i`, so it is tied to the global face `triangle_faces[t][i]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{FemError, Result};
use crate::mesh::{AffineMap, Mesh, Point};
use crate::quadrature::QuadratureRule;

pub use crate::mesh::transform_gradients;

/// The finite element families known to the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    P1,
    P2,
    /// Lowest-order Raviart-Thomas, one normal flux per face.
    Rt0,
    /// Discontinuous `P_k`, each element owning a private DOF block.
    Dg(usize),
}

impl ElementKind {
    pub const P0: ElementKind = ElementKind::Dg(0);

    /// Polynomial degree of the scalar space (1 for RT0).
    pub fn degree(self) -> usize {
        match self {
            ElementKind::P1 | ElementKind::Rt0 => 1,
            ElementKind::P2 => 2,
            ElementKind::Dg(k) => k,
        }
    }

    /// Local DOFs per triangle.
    pub fn local_dofs(self) -> usize {
        match self {
            ElementKind::P1 | ElementKind::Rt0 => 3,
            ElementKind::P2 => 6,
            ElementKind::Dg(k) => (k + 1) * (k + 2) / 2,
        }
    }

    pub fn is_scalar(self) -> bool {
        !matches!(self, ElementKind::Rt0)
    }

    fn check_supported(self) -> Result<()> {
        match self {
            ElementKind::Dg(k) if k > 2 => Err(FemError::UnsupportedElement(format!(
                "discontinuous elements of degree {k}; supported degrees are 0, 1, 2"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementKind::P1 => write!(f, "P1"),
            ElementKind::P2 => write!(f, "P2"),
            ElementKind::Rt0 => write!(f, "RT0"),
            ElementKind::Dg(k) => write!(f, "DG{k}"),
        }
    }
}

impl std::str::FromStr for ElementKind {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "p1" => Ok(ElementKind::P1),
            "p2" => Ok(ElementKind::P2),
            "p0" => Ok(ElementKind::P0),
            "rt0" => Ok(ElementKind::Rt0),
            _ => lower
                .strip_prefix("dg")
                .and_then(|k| k.parse().ok())
                .map(ElementKind::Dg)
                .ok_or_else(|| FemError::InvalidArgument(format!("unknown element kind '{s}'"))),
        }
    }
}

const LAMBDA_GRADS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

fn barycentric(xi: Point) -> [f64; 3] {
    [1.0 - xi[0] - xi[1], xi[0], xi[1]]
}

/// Linear Lagrange basis `(1 - xi1 - xi2, xi1, xi2)` and its constant gradients.
///
/// Points outside the reference triangle are extrapolated.
pub fn p1_basis(xi: Point) -> ([f64; 3], [[f64; 2]; 3]) {
    (barycentric(xi), LAMBDA_GRADS)
}

/// Quadratic Lagrange basis: `l_i (2 l_i - 1)` at the vertices and
/// `4 l_{i+1} l_{i+2}` at the midpoint opposite vertex `i`.
pub fn p2_basis(xi: Point) -> ([f64; 6], [[f64; 2]; 6]) {
    let l = barycentric(xi);
    let g = LAMBDA_GRADS;
    let mut values = [0.0; 6];
    let mut grads = [[0.0; 2]; 6];
    for i in 0..3 {
        values[i] = l[i] * (2.0 * l[i] - 1.0);
        let s = 4.0 * l[i] - 1.0;
        grads[i] = [s * g[i][0], s * g[i][1]];
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        values[3 + i] = 4.0 * l[a] * l[b];
        grads[3 + i] = [4.0 * (l[a] * g[b][0] + l[b] * g[a][0]), 4.0 * (l[a] * g[b][1] + l[b] * g[a][1])];
    }
    (values, grads)
}

/// Linear element on `[0, 1]`: values `(1 - s, s)` and derivatives `(-1, 1)`.
pub fn p1_basis_1d(s: f64) -> ([f64; 2], [f64; 2]) {
    ([1.0 - s, s], [-1.0, 1.0])
}

/// RT0 basis on the reference triangle, `psi_j = (x - z_j) / (2|K|)` with
/// `z_j` the vertex opposite edge `j`: unit outward flux through edge `j`,
/// zero flux through the others and divergence `1/|K| = 2`.
pub fn rt0_basis(xi: Point) -> ([[f64; 2]; 3], [f64; 3]) {
    const Z: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mut v = [[0.0; 2]; 3];
    for j in 0..3 {
        v[j] = [xi[0] - Z[j][0], xi[1] - Z[j][1]];
    }
    (v, [2.0; 3])
}

/// Scalar Lagrange element of degree `k` on the reference triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceElement {
    pub degree: usize,
    pub num_dofs: usize,
    /// Reference coordinates of the nodal points.
    pub dof_nodes: Vec<Point>,
}

impl ReferenceElement {
    /// Lagrange element of degree 0, 1 or 2 (degree 0 lives at the centroid).
    pub fn lagrange(degree: usize) -> Result<Self> {
        let dof_nodes = match degree {
            0 => vec![[1.0 / 3.0, 1.0 / 3.0]],
            1 => vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            2 => vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [0.0, 0.5], [0.5, 0.0]],
            k => {
                return Err(FemError::UnsupportedElement(format!("Lagrange degree {k}; supported degrees are 0, 1, 2")))
            }
        };
        Ok(ReferenceElement { degree, num_dofs: dof_nodes.len(), dof_nodes })
    }

    /// Reference element of the scalar kinds.
    pub fn of_kind(kind: ElementKind) -> Result<Self> {
        match kind {
            ElementKind::Rt0 => Err(FemError::UnsupportedElement("RT0 is vector valued; use rt0_basis".into())),
            k => Self::lagrange(k.degree()),
        }
    }

    pub fn eval(&self, xi: Point) -> Vec<f64> {
        match self.degree {
            0 => vec![1.0],
            1 => p1_basis(xi).0.to_vec(),
            _ => p2_basis(xi).0.to_vec(),
        }
    }

    pub fn grad(&self, xi: Point) -> Vec<[f64; 2]> {
        match self.degree {
            0 => vec![[0.0, 0.0]],
            1 => p1_basis(xi).1.to_vec(),
            _ => p2_basis(xi).1.to_vec(),
        }
    }

    /// Values and reference gradients at every point of a rule.
    pub fn tabulate(&self, rule: &QuadratureRule) -> Tabulation {
        let pts: Vec<Point> = rule.reference_points().collect();
        self.tabulate_points(&pts)
    }

    pub fn tabulate_points(&self, points: &[Point]) -> Tabulation {
        Tabulation {
            values: points.iter().map(|&p| self.eval(p)).collect(),
            grads: points.iter().map(|&p| self.grad(p)).collect(),
        }
    }
}

/// Basis values `values[q][i]` and reference gradients `grads[q][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulation {
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 2]>>,
}

/// Local-to-global DOF indices for every triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    kind: ElementKind,
    n_dofs: usize,
    per_cell: usize,
    dofs: Vec<usize>,
    /// Orientation signs, `+1` except for RT0.
    signs: Vec<f64>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, kind: ElementKind) -> Result<Self> {
        kind.check_supported()?;
        let nt = mesh.n_triangles();
        let per_cell = kind.local_dofs();
        let mut dofs = Vec::with_capacity(nt * per_cell);
        let mut signs = vec![1.0; nt * per_cell];
        let n_dofs = match kind {
            ElementKind::P1 => {
                mesh.triangles().iter().for_each(|t| dofs.extend_from_slice(t));
                mesh.n_nodes()
            }
            ElementKind::P2 => {
                let nn = mesh.n_nodes();
                for (t, tri) in mesh.triangles().iter().enumerate() {
                    dofs.extend_from_slice(tri);
                    dofs.extend(mesh.triangle_faces()[t].iter().map(|f| nn + f));
                }
                nn + mesh.n_faces()
            }
            ElementKind::Rt0 => {
                for t in 0..nt {
                    dofs.extend_from_slice(&mesh.triangle_faces()[t]);
                    for local in 0..3 {
                        signs[3 * t + local] = mesh.face_sign(t, local);
                    }
                }
                mesh.n_faces()
            }
            ElementKind::Dg(_) => {
                dofs.extend(0..nt * per_cell);
                nt * per_cell
            }
        };
        Ok(DofMap { kind, n_dofs, per_cell, dofs, signs })
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_cells(&self) -> usize {
        self.dofs.len() / self.per_cell
    }

    pub fn local_dofs(&self) -> usize {
        self.per_cell
    }

    pub fn cell(&self, t: usize) -> &[usize] {
        &self.dofs[t * self.per_cell..(t + 1) * self.per_cell]
    }

    pub fn signs(&self, t: usize) -> &[f64] {
        &self.signs[t * self.per_cell..(t + 1) * self.per_cell]
    }
}

/// Number of global DOFs of `kind` on `mesh`.
pub fn n_dofs(mesh: &Mesh, kind: ElementKind) -> usize {
    match kind {
        ElementKind::P1 => mesh.n_nodes(),
        ElementKind::P2 => mesh.n_nodes() + mesh.n_faces(),
        ElementKind::Rt0 => mesh.n_faces(),
        ElementKind::Dg(_) => mesh.n_triangles() * kind.local_dofs(),
    }
}

/// Physical RT0 basis on triangle `t` at point `x`, including the global
/// orientation signs: `psi_j = s_j (x - p_j) / (2|K|)`, `div psi_j = s_j / |K|`.
pub fn rt0_physical(mesh: &Mesh, t: usize, x: Point) -> ([[f64; 2]; 3], [f64; 3]) {
    let verts = mesh.vertices(t);
    let area = mesh.area(t);
    let mut v = [[0.0; 2]; 3];
    let mut div = [0.0; 3];
    for j in 0..3 {
        let s = mesh.face_sign(t, j);
        let c = s / (2.0 * area);
        v[j] = [c * (x[0] - verts[j][0]), c * (x[1] - verts[j][1])];
        div[j] = s / area;
    }
    (v, div)
}

/// A coefficient vector bound to a mesh and an element kind.
#[derive(Debug, Clone)]
pub struct FeFunction {
    mesh: Arc<Mesh>,
    kind: ElementKind,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(mesh: Arc<Mesh>, kind: ElementKind, coeffs: Vec<f64>) -> Result<Self> {
        kind.check_supported()?;
        let expected = n_dofs(&mesh, kind);
        if coeffs.len() != expected {
            return Err(FemError::Dimension(format!(
                "{kind} on this mesh has {expected} DOFs, got {} coefficients",
                coeffs.len()
            )));
        }
        Ok(FeFunction { mesh, kind, coeffs })
    }

    pub fn zeros(mesh: Arc<Mesh>, kind: ElementKind) -> Result<Self> {
        let n = n_dofs(&mesh, kind);
        Self::new(mesh, kind, vec![0.0; n])
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coeffs
    }

    /// Global DOF indices of triangle `t`.
    pub fn cell_dofs(&self, t: usize) -> Vec<usize> {
        let mesh = &self.mesh;
        match self.kind {
            ElementKind::P1 => mesh.triangles()[t].to_vec(),
            ElementKind::P2 => {
                let mut d = mesh.triangles()[t].to_vec();
                d.extend(mesh.triangle_faces()[t].iter().map(|f| mesh.n_nodes() + f));
                d
            }
            ElementKind::Rt0 => mesh.triangle_faces()[t].to_vec(),
            ElementKind::Dg(_) => {
                let d = self.kind.local_dofs();
                (t * d..(t + 1) * d).collect()
            }
        }
    }

    fn local(&self, t: usize) -> Vec<f64> {
        self.cell_dofs(t).into_iter().map(|i| self.coeffs[i]).collect()
    }

    /// Value of a scalar function in triangle `t` at reference point `xi`.
    pub fn value(&self, t: usize, xi: Point) -> f64 {
        assert!(self.kind.is_scalar(), "value() on a vector-valued function");
        let r = ReferenceElement::lagrange(self.kind.degree()).expect("supported degree");
        r.eval(xi).iter().zip(self.local(t)).map(|(p, c)| p * c).sum()
    }

    /// Physical gradient of a scalar function in triangle `t` at reference point `xi`.
    pub fn gradient(&self, t: usize, map: &AffineMap, xi: Point) -> [f64; 2] {
        assert!(self.kind.is_scalar(), "gradient() on a vector-valued function");
        let r = ReferenceElement::lagrange(self.kind.degree()).expect("supported degree");
        let mut g = [0.0; 2];
        for (rg, c) in r.grad(xi).iter().zip(self.local(t)) {
            let pg = map.transform_gradient(*rg);
            g[0] += c * pg[0];
            g[1] += c * pg[1];
        }
        g
    }

    /// Value of an RT0 field in triangle `t` at physical point `x`.
    pub fn vector_value(&self, t: usize, x: Point) -> [f64; 2] {
        assert_eq!(self.kind, ElementKind::Rt0, "vector_value() needs an RT0 function");
        let (psi, _) = rt0_physical(&self.mesh, t, x);
        let c = self.local(t);
        [(0..3).map(|j| c[j] * psi[j][0]).sum(), (0..3).map(|j| c[j] * psi[j][1]).sum()]
    }

    /// Constant divergence of an RT0 field on triangle `t`.
    pub fn divergence(&self, t: usize) -> f64 {
        assert_eq!(self.kind, ElementKind::Rt0, "divergence() needs an RT0 function");
        let (_, div) = rt0_physical(&self.mesh, t, self.mesh.centroid(t));
        self.local(t).iter().zip(div).map(|(c, d)| c * d).sum()
    }

    /// Triangle containing `x` and the reference coordinates of `x` in it.
    pub fn locate(&self, x: Point) -> Option<(usize, Point)> {
        let tol = 1e-12;
        (0..self.mesh.n_triangles()).find_map(|t| {
            let map = self.mesh.affine_map(t).ok()?;
            let xi = map.inverse(x);
            let inside = xi[0] >= -tol && xi[1] >= -tol && xi[0] + xi[1] <= 1.0 + tol;
            inside.then_some((t, xi))
        })
    }

    /// Point evaluation of a scalar function; `None` outside the mesh.
    pub fn eval_point(&self, x: Point) -> Option<f64> {
        let (t, xi) = self.locate(x)?;
        Some(self.value(t, xi))
    }

    /// Values at the mesh vertices. Quadratic midpoint values are dropped;
    /// discontinuous functions are averaged over the triangles sharing a vertex.
    pub fn vertex_values(&self) -> Vec<f64> {
        let nn = self.mesh.n_nodes();
        match self.kind {
            ElementKind::P1 | ElementKind::P2 => self.coeffs[..nn].to_vec(),
            ElementKind::Dg(_) => {
                let mut sum = vec![0.0; nn];
                let mut count = vec![0usize; nn];
                let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
                for (t, tri) in self.mesh.triangles().iter().enumerate() {
                    for (v, xi) in tri.iter().zip(corners) {
                        sum[*v] += self.value(t, xi);
                        count[*v] += 1;
                    }
                }
                sum.iter().zip(count).map(|(s, c)| s / c.max(1) as f64).collect()
            }
            ElementKind::Rt0 => panic!("vertex_values() on a vector-valued function"),
        }
    }

    /// Scalar value at each triangle's barycenter.
    pub fn cell_values(&self) -> Vec<f64> {
        (0..self.mesh.n_triangles()).map(|t| self.value(t, [1.0 / 3.0, 1.0 / 3.0])).collect()
    }

    /// RT0 vector at each triangle's barycenter.
    pub fn cell_vectors(&self) -> Vec<[f64; 2]> {
        (0..self.mesh.n_triangles()).map(|t| self.vector_value(t, self.mesh.centroid(t))).collect()
    }
}

/// Physical positions of the scalar DOFs of `kind`, in global order.
pub fn dof_points(mesh: &Mesh, kind: ElementKind) -> Result<Vec<Point>> {
    kind.check_supported()?;
    Ok(match kind {
        ElementKind::P1 => mesh.nodes().to_vec(),
        ElementKind::P2 => {
            let mut pts = mesh.nodes().to_vec();
            pts.extend((0..mesh.n_faces()).map(|f| mesh.face_midpoint(f)));
            pts
        }
        ElementKind::Dg(k) => {
            let r = ReferenceElement::lagrange(k)?;
            let mut pts = Vec::with_capacity(mesh.n_triangles() * r.num_dofs);
            for t in 0..mesh.n_triangles() {
                let map = mesh.affine_map(t)?;
                pts.extend(r.dof_nodes.iter().map(|&xi| map.map(xi)));
            }
            pts
        }
        ElementKind::Rt0 => {
            return Err(FemError::UnsupportedElement("nodal interpolation of RT0; use the RT projection".into()))
        }
    })
}

/// Nodal interpolant of `f`: coefficients are the values of `f` at the DOF points.
pub fn interpolate(mesh: &Arc<Mesh>, kind: ElementKind, f: impl Fn(Point) -> f64) -> Result<FeFunction> {
    let coeffs = dof_points(mesh, kind)?.into_iter().map(f).collect();
    FeFunction::new(Arc::clone(mesh), kind, coeffs)
}

/// Reinterpolates a scalar FE function into `kind` by evaluating it elementwise.
pub fn interpolate_fe(u: &FeFunction, kind: ElementKind) -> Result<FeFunction> {
    let mesh = Arc::clone(u.mesh());
    let mut coeffs = vec![0.0; n_dofs(&mesh, kind)];
    let target = ReferenceElement::of_kind(kind)?;
    let dofs = DofMap::new(&mesh, kind)?;
    for t in 0..mesh.n_triangles() {
        for (xi, &g) in target.dof_nodes.iter().zip(dofs.cell(t)) {
            coeffs[g] = u.value(t, *xi);
        }
    }
    FeFunction::new(mesh, kind, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;
    use crate::quadrature::edge_rule;

    #[test]
    fn p1_vertex_values() {
        assert_eq!(p1_basis([0.0, 0.0]).0, [1.0, 0.0, 0.0]);
        let (v, g) = p1_basis([1.0 / 3.0, 1.0 / 3.0]);
        for x in v {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(g.iter().map(|g| g[0]).sum::<f64>(), 0.0);
    }

    #[test]
    fn p2_nodal_property() {
        let r = ReferenceElement::lagrange(2).unwrap();
        for (j, &node) in r.dof_nodes.iter().enumerate() {
            let v = r.eval(node);
            for (i, x) in v.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((x - expect).abs() < 1e-14, "psi_{i} at node {j}");
            }
        }
        let bary: f64 = r.eval([1.0 / 3.0, 1.0 / 3.0]).iter().sum();
        assert!((bary - 1.0).abs() < 1e-14);
    }

    #[test]
    fn p2_midpoint_belongs_to_opposite_edge() {
        // DOF 3 sits between vertices 1 and 2.
        let r = ReferenceElement::lagrange(2).unwrap();
        assert_eq!(r.dof_nodes[3], [0.5, 0.5]);
        assert_eq!(r.eval([0.5, 0.5])[3], 1.0);
    }

    #[test]
    fn rt0_flux_matrix_is_identity() {
        let z: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let rule = edge_rule(2).unwrap();
        for i in 0..3 {
            let (a, b) = (z[(i + 1) % 3], z[(i + 2) % 3]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let nu = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
            for j in 0..3 {
                let flux: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&s, w)| {
                        let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                        let v = rt0_basis(x).0[j];
                        w * len * (v[0] * nu[0] + v[1] * nu[1])
                    })
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((flux - expect).abs() < 1e-14);
            }
        }
        assert_eq!(rt0_basis([0.2, 0.3]).1, [2.0; 3]);
    }

    #[test]
    fn element_kind_parsing() {
        assert_eq!("p2".parse::<ElementKind>().unwrap(), ElementKind::P2);
        assert_eq!("DG1".parse::<ElementKind>().unwrap(), ElementKind::Dg(1));
        assert_eq!("p0".parse::<ElementKind>().unwrap(), ElementKind::Dg(0));
        assert!("q1".parse::<ElementKind>().is_err());
    }

    #[test]
    fn interpolate_constants_and_linears() {
        let mesh = Arc::new(unit_square_mesh(3).unwrap());
        let one = interpolate(&mesh, ElementKind::P1, |_| 1.0).unwrap();
        assert!(one.coefficients().iter().all(|&c| c == 1.0));
        let x = interpolate(&mesh, ElementKind::P1, |p| p[0]).unwrap();
        for (c, p) in x.coefficients().iter().zip(mesh.nodes()) {
            assert_eq!(*c, p[0]);
        }
        assert!((x.eval_point([0.37, 0.81]).unwrap() - 0.37).abs() < 1e-14);
    }

    #[test]
    fn interpolation_is_a_projection() {
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        for kind in [ElementKind::P1, ElementKind::P2, ElementKind::Dg(1)] {
            let u = interpolate(&mesh, kind, |p| (3.0 * p[0]).sin() + p[1] * p[1]).unwrap();
            let again = interpolate_fe(&u, kind).unwrap();
            assert_eq!(u.coefficients(), again.coefficients());
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let mesh = Arc::new(unit_square_mesh(1).unwrap());
        assert!(FeFunction::new(mesh, ElementKind::P1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn physical_gradient_on_stretched_triangle() {
        let map = AffineMap::from_vertices([0.0, 0.0], [2.0, 0.0], [0.0, 1.0]).unwrap();
        let g = transform_gradients(&map, &p1_basis([0.2, 0.2]).1);
        assert!((g[1][0] - 0.5).abs() < 1e-15 && g[1][1].abs() < 1e-15);
    }
}
