//! Conforming triangulations of polygonal domains and 1D interval partitions.
//!
//! Triangles are stored counter-clockwise with the local vertex order
//! `(v0, v1, v2)` chosen so that the edge `(v0, v1)` is the refinement edge
//! used by newest-vertex bisection. Local edge `i` is the edge opposite
//! vertex `i`.
//!
//! Faces carry a global index: interior faces come first, followed by the
//! boundary faces. Every face stores its end points in the counter-clockwise
//! order of its first (lower-index) triangle, so the unit normal obtained by
//! rotating the edge vector by -90 degrees points out of that triangle. For
//! interior faces this is the normal from `left` to `right`; for boundary
//! faces it is the outward normal.

mod geometry;
mod io;
mod refine;

use std::collections::HashMap;

pub use geometry::{transform_gradients, AffineMap, ShapeMetrics};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};

use crate::error::{FemError, Result};

pub type Point = [f64; 2];

/// A face on the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub nodes: [usize; 2],
    pub tag: u32,
    pub triangle: usize,
}

/// A face shared by two triangles, `left < right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteriorFace {
    pub nodes: [usize; 2],
    pub left: usize,
    pub right: usize,
}

/// Boundary tag given to boundary edges that the input does not list.
pub const DEFAULT_BOUNDARY_TAG: u32 = 1;

#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    interior_faces: Vec<InteriorFace>,
    boundary_faces: Vec<BoundaryFace>,
    triangle_faces: Vec<[usize; 3]>,
}

/// Face-to-triangle incidence computed from connectivity alone.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTopology {
    pub interior: Vec<InteriorFace>,
    /// Boundary faces with the default tag; `Mesh` replaces the tags.
    pub boundary: Vec<BoundaryFace>,
    pub triangle_faces: Vec<[usize; 3]>,
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn signed_area(p0: Point, p1: Point, p2: Point) -> f64 {
    0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Edge incidence of a triangle list.
///
/// Fails when an edge is shared by three or more triangles.
pub fn build_face_topology(triangles: &[[usize; 3]]) -> Result<FaceTopology> {
    // (first triangle, its local edge, count, second triangle)
    let mut seen: HashMap<(usize, usize), (usize, usize, usize, usize)> = HashMap::new();
    let mut order = Vec::new();
    for (t, tri) in triangles.iter().enumerate() {
        for local in 0..3 {
            let a = tri[(local + 1) % 3];
            let b = tri[(local + 2) % 3];
            let key = edge_key(a, b);
            match seen.get_mut(&key) {
                Some(entry) => {
                    entry.2 += 1;
                    if entry.2 > 2 {
                        return Err(FemError::NonManifold(key.0, key.1, entry.2));
                    }
                    entry.3 = t;
                }
                None => {
                    seen.insert(key, (t, local, 1, usize::MAX));
                    order.push(key);
                }
            }
        }
    }

    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut index_of: HashMap<(usize, usize), (bool, usize)> = HashMap::with_capacity(order.len());
    for key in &order {
        let (t, local, count, other) = seen[key];
        let tri = triangles[t];
        let nodes = [tri[(local + 1) % 3], tri[(local + 2) % 3]];
        if count == 2 {
            index_of.insert(*key, (true, interior.len()));
            interior.push(InteriorFace { nodes, left: t, right: other });
        } else {
            index_of.insert(*key, (false, boundary.len()));
            boundary.push(BoundaryFace { nodes, tag: DEFAULT_BOUNDARY_TAG, triangle: t });
        }
    }
    let n_interior = interior.len();
    let triangle_faces = triangles
        .iter()
        .map(|tri| {
            let mut faces = [0; 3];
            for (local, face) in faces.iter_mut().enumerate() {
                let key = edge_key(tri[(local + 1) % 3], tri[(local + 2) % 3]);
                let (is_interior, idx) = index_of[&key];
                *face = if is_interior { idx } else { n_interior + idx };
            }
            faces
        })
        .collect();
    Ok(FaceTopology { interior, boundary, triangle_faces })
}

impl Mesh {
    /// Builds a root mesh.
    ///
    /// Clockwise triangles are reoriented by swapping two vertices, and each
    /// triangle is rotated so that its longest edge becomes the refinement
    /// edge. `boundary` lists tagged boundary edges `(i, j, tag)`; boundary
    /// edges missing from the list get [`DEFAULT_BOUNDARY_TAG`].
    pub fn new(nodes: Vec<Point>, triangles: Vec<[usize; 3]>, boundary: &[(usize, usize, u32)]) -> Result<Self> {
        let n = nodes.len();
        let mut oriented = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= n) {
                return Err(FemError::InvalidArgument(format!(
                    "triangle {t} references node {bad} but only {n} nodes exist"
                )));
            }
            let mut tri = *tri;
            if signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) < 0.0 {
                tri.swap(1, 2);
            }
            // refinement edge (v0, v1) = local edge 2
            let len = |i: usize| dist(nodes[tri[(i + 1) % 3]], nodes[tri[(i + 2) % 3]]);
            let mut longest = 2;
            for i in [0, 1] {
                if len(i) > len(longest) * (1.0 + 1e-12) {
                    longest = i;
                }
            }
            let shift = (longest + 1) % 3;
            oriented.push([tri[shift], tri[(shift + 1) % 3], tri[(shift + 2) % 3]]);
        }
        Self::assemble(nodes, oriented, boundary)
    }

    /// Builds a mesh from already oriented triangles, keeping their vertex order.
    pub(crate) fn from_oriented(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: &[(usize, usize, u32)],
    ) -> Result<Self> {
        Self::assemble(nodes, triangles, boundary)
    }

    fn assemble(nodes: Vec<Point>, triangles: Vec<[usize; 3]>, boundary: &[(usize, usize, u32)]) -> Result<Self> {
        if triangles.is_empty() {
            return Err(FemError::InvalidArgument("mesh has no triangles".into()));
        }
        let n = nodes.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= n) {
                return Err(FemError::InvalidArgument(format!(
                    "triangle {t} references node {bad} but only {n} nodes exist"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(FemError::Geometry { triangle: t, message: "repeated vertex".into() });
            }
            let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if !(area > 0.0) {
                return Err(FemError::Geometry { triangle: t, message: format!("non-positive signed area {area:e}") });
            }
        }
        let topo = build_face_topology(&triangles)?;
        let mut boundary_faces = topo.boundary;
        let mut face_pos: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, f) in boundary_faces.iter().enumerate() {
            face_pos.insert(edge_key(f.nodes[0], f.nodes[1]), i);
        }
        for &(a, b, tag) in boundary {
            match face_pos.get(&edge_key(a, b)) {
                Some(&i) => boundary_faces[i].tag = tag,
                None => {
                    return Err(FemError::Conformity(format!(
                        "listed boundary edge ({a}, {b}) is not a boundary edge of the triangulation"
                    )))
                }
            }
        }
        let mesh = Mesh {
            nodes,
            triangles,
            interior_faces: topo.interior,
            boundary_faces,
            triangle_faces: topo.triangle_faces,
        };
        mesh.check_hanging_nodes()?;
        Ok(mesh)
    }

    /// A vertex lying inside a boundary-count edge means two triangles meet
    /// in a T-junction. Such vertices are themselves end points of
    /// boundary-count edges, so only those need to be tested.
    fn check_hanging_nodes(&self) -> Result<()> {
        let tol = 1e-12 * self.diameter();
        let mut candidates: Vec<usize> = self.boundary_faces.iter().flat_map(|f| f.nodes).collect();
        candidates.sort_unstable();
        candidates.dedup();
        candidates.sort_by(|&a, &b| self.nodes[a][0].total_cmp(&self.nodes[b][0]));
        let xs: Vec<f64> = candidates.iter().map(|&i| self.nodes[i][0]).collect();
        for f in &self.boundary_faces {
            let [a, b] = f.nodes;
            let (pa, pb) = (self.nodes[a], self.nodes[b]);
            let (lo, hi) = (pa[0].min(pb[0]) - tol, pa[0].max(pb[0]) + tol);
            let start = xs.partition_point(|&x| x < lo);
            let e = [pb[0] - pa[0], pb[1] - pa[1]];
            let len2 = e[0] * e[0] + e[1] * e[1];
            let len = len2.sqrt();
            for &p in &candidates[start..] {
                let pp = self.nodes[p];
                if pp[0] > hi {
                    break;
                }
                if p == a || p == b {
                    continue;
                }
                let d = [pp[0] - pa[0], pp[1] - pa[1]];
                let cross = e[0] * d[1] - e[1] * d[0];
                let s = (e[0] * d[0] + e[1] * d[1]) / len2;
                if cross.abs() <= tol * len && s > 0.0 && s < 1.0 {
                    return Err(FemError::Conformity(format!("node {p} lies inside edge ({a}, {b})")));
                }
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn interior_faces(&self) -> &[InteriorFace] {
        &self.interior_faces
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    /// Global face indices of the three local edges (edge `i` opposite vertex `i`).
    pub fn triangle_faces(&self) -> &[[usize; 3]] {
        &self.triangle_faces
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_faces(&self) -> usize {
        self.interior_faces.len() + self.boundary_faces.len()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.interior_faces.len()
    }

    /// Topology of this mesh as `(interior faces, boundary faces)`.
    pub fn face_topology(&self) -> (&[InteriorFace], &[BoundaryFace]) {
        (&self.interior_faces, &self.boundary_faces)
    }

    /// End points of a global face, oriented as described in the module docs.
    pub fn face_nodes(&self, face: usize) -> [usize; 2] {
        match self.boundary_index(face) {
            None => self.interior_faces[face].nodes,
            Some(b) => self.boundary_faces[b].nodes,
        }
    }

    /// `Some(i)` when global face `face` is boundary face `i`.
    pub fn boundary_index(&self, face: usize) -> Option<usize> {
        face.checked_sub(self.interior_faces.len())
    }

    /// The triangles adjacent to a global face; the second is `None` on the boundary.
    pub fn face_triangles(&self, face: usize) -> (usize, Option<usize>) {
        match self.boundary_index(face) {
            None => {
                let f = &self.interior_faces[face];
                (f.left, Some(f.right))
            }
            Some(b) => (self.boundary_faces[b].triangle, None),
        }
    }

    pub fn face_length(&self, face: usize) -> f64 {
        let [a, b] = self.face_nodes(face);
        dist(self.nodes[a], self.nodes[b])
    }

    pub fn face_midpoint(&self, face: usize) -> Point {
        let [a, b] = self.face_nodes(face);
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Unit normal of a global face in its global orientation.
    pub fn face_normal(&self, face: usize) -> Point {
        let [a, b] = self.face_nodes(face);
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = dx.hypot(dy);
        [dy / len, -dx / len]
    }

    /// `+1` if the global normal of local edge `local` of triangle `t`
    /// points out of `t`, `-1` otherwise.
    pub fn face_sign(&self, t: usize, local: usize) -> f64 {
        let face = self.triangle_faces[t][local];
        if self.face_triangles(face).0 == t {
            1.0
        } else {
            -1.0
        }
    }

    pub fn vertices(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.vertices(t);
        signed_area(p0, p1, p2)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [p0, p1, p2] = self.vertices(t);
        [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]
    }

    /// Longest pairwise vertex distance of triangle `t`.
    pub fn diameter_of(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.vertices(t);
        dist(p0, p1).max(dist(p1, p2)).max(dist(p2, p0))
    }

    /// Largest element diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.diameter_of(t)).fold(0.0, f64::max)
    }

    /// Diameter of the bounding box of all nodes.
    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }

    /// Affine map from the reference triangle onto triangle `t`.
    pub fn affine_map(&self, t: usize) -> Result<AffineMap> {
        let [p0, p1, p2] = self.vertices(t);
        AffineMap::from_vertices(p0, p1, p2).map_err(|e| match e {
            FemError::Geometry { message, .. } => FemError::Geometry { triangle: t, message },
            other => other,
        })
    }

    /// Distinct boundary tags in increasing order.
    pub fn boundary_tags(&self) -> Vec<u32> {
        let mut tags: Vec<u32> = self.boundary_faces.iter().map(|f| f.tag).collect();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    /// Boundary edges as `(i, j, tag)` triples.
    pub fn boundary_list(&self) -> Vec<(usize, usize, u32)> {
        self.boundary_faces.iter().map(|f| (f.nodes[0], f.nodes[1], f.tag)).collect()
    }

    /// Shape metrics of every triangle.
    pub fn shape_metrics(&self) -> Result<Vec<ShapeMetrics>> {
        (0..self.n_triangles())
            .map(|t| {
                let [p0, p1, p2] = self.vertices(t);
                ShapeMetrics::of_triangle(p0, p1, p2).map_err(|e| match e {
                    FemError::Geometry { message, .. } => FemError::Geometry { triangle: t, message },
                    other => other,
                })
            })
            .collect()
    }

    /// Returns a copy whose boundary tags are reassigned by `tag_of(midpoint, old_tag)`.
    pub fn retag_boundary(&self, tag_of: impl Fn(Point, u32) -> u32) -> Mesh {
        let mut mesh = self.clone();
        let n_int = mesh.interior_faces.len();
        for i in 0..mesh.boundary_faces.len() {
            let mid = self.face_midpoint(n_int + i);
            mesh.boundary_faces[i].tag = tag_of(mid, mesh.boundary_faces[i].tag);
        }
        mesh
    }
}

/// `2 n^2` right triangles on the unit square, every cell split along the
/// same diagonal. Boundary tags: bottom 1, right 2, top 3, left 4.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    rectangle_mesh([0.0, 0.0], [1.0, 1.0], n, n)
}

/// Uniform right-triangle mesh of an axis-aligned rectangle, tagged as
/// [`unit_square_mesh`].
pub fn rectangle_mesh(lo: Point, hi: Point, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(FemError::InvalidArgument("number of subdivisions must be at least 1".into()));
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes
                .push([lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64, lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push((idx(i, 0), idx(i + 1, 0), 1));
        boundary.push((idx(i + 1, ny), idx(i, ny), 3));
    }
    for j in 0..ny {
        boundary.push((idx(nx, j), idx(nx, j + 1), 2));
        boundary.push((idx(0, j + 1), idx(0, j), 4));
    }
    Mesh::new(nodes, triangles, &boundary)
}

/// L-shaped domain `(-1,1)^2 \ [0,1) x (-1,0]` with cells of width `1/n`;
/// all boundary faces carry tag 1.
pub fn lshape_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(FemError::InvalidArgument("number of subdivisions must be at least 1".into()));
    }
    let m = 2 * n;
    let coord = |i: usize| -1.0 + i as f64 / n as f64;
    let in_hole = |i: usize, j: usize| i >= n && j < n; // cell (i, j) has lower-left corner (coord(i), coord(j))
    let mut id = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut nodes = Vec::new();
    let mut triangles = Vec::new();
    let mut node = |i: usize, j: usize, nodes: &mut Vec<Point>| {
        let k = j * (m + 1) + i;
        if id[k] == usize::MAX {
            id[k] = nodes.len();
            nodes.push([coord(i), coord(j)]);
        }
        id[k]
    };
    for j in 0..m {
        for i in 0..m {
            if in_hole(i, j) {
                continue;
            }
            let a = node(i, j, &mut nodes);
            let b = node(i + 1, j, &mut nodes);
            let c = node(i + 1, j + 1, &mut nodes);
            let d = node(i, j + 1, &mut nodes);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::new(nodes, triangles, &[])
}

/// Partition `0 = x_0 < x_1 < ... < x_n = 1` of the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(FemError::InvalidArgument("a 1D mesh needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 || nodes[nodes.len() - 1] != 1.0 {
            return Err(FemError::InvalidArgument("1D mesh must start at 0 and end at 1".into()));
        }
        if let Some(i) = nodes.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(FemError::InvalidArgument(format!("1D nodes not strictly increasing at index {}", i + 1)));
        }
        Ok(Mesh1D { nodes })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FemError::InvalidArgument("n must be at least 1".into()));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        nodes[n] = 1.0;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn h(&self, element: usize) -> f64 {
        self.nodes[element + 1] - self.nodes[element]
    }

    pub fn h_max(&self) -> f64 {
        (0..self.n_elements()).map(|i| self.h(i)).fold(0.0, f64::max)
    }

    /// Splits every listed element into two halves.
    pub fn refine_marked(&self, marked: &[usize]) -> Result<Self> {
        let mut split = vec![false; self.n_elements()];
        for &e in marked {
            *split.get_mut(e).ok_or_else(|| FemError::InvalidArgument(format!("element {e} out of range")))? = true;
        }
        let mut nodes = Vec::with_capacity(self.nodes.len() + marked.len());
        for (e, w) in self.nodes.windows(2).enumerate() {
            nodes.push(w[0]);
            if split[e] {
                nodes.push(0.5 * (w[0] + w[1]));
            }
        }
        nodes.push(1.0);
        Self::new(nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_square_mesh() {
        let m = unit_square_mesh(1).unwrap();
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.n_nodes(), 4);
        assert_eq!(m.boundary_faces().len(), 4);
        assert_eq!(m.interior_faces().len(), 1);
    }

    #[test]
    fn two_by_two_counts() {
        let m = unit_square_mesh(2).unwrap();
        assert_eq!(m.n_triangles(), 8);
        assert_eq!(m.n_nodes(), 9);
        assert!((m.total_area() - 1.0).abs() < 1e-14);
        assert_eq!(m.interior_faces().len(), 8);
        assert_eq!(m.boundary_faces().len(), 8);
        assert_eq!(3 * m.n_triangles(), 2 * m.interior_faces().len() + m.boundary_faces().len());
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(unit_square_mesh(0), Err(FemError::InvalidArgument(_))));
    }

    #[test]
    fn single_triangle_topology() {
        let topo = build_face_topology(&[[0, 1, 2]]).unwrap();
        assert_eq!(topo.interior.len(), 0);
        assert_eq!(topo.boundary.len(), 3);
    }

    #[test]
    fn non_manifold_edge_detected() {
        let tris = [[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        assert!(matches!(build_face_topology(&tris), Err(FemError::NonManifold(0, 1, 3))));
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let m = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 2, 1]], &[]).unwrap();
        assert!(m.area(0) > 0.0);
        // refinement edge is the hypotenuse
        let t = m.triangles()[0];
        let mut e = [t[0], t[1]];
        e.sort();
        assert_eq!(e, [1, 2]);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let err = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]], &[]);
        assert!(matches!(err, Err(FemError::Geometry { triangle: 0, .. })));
    }

    #[test]
    fn t_junction_detected() {
        let nodes = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [1.0, -1.0], [1.0, 0.0]];
        // node 4 sits on the edge (0,1) of the upper triangle
        let tris = vec![[0, 1, 2], [0, 3, 4], [4, 3, 1]];
        let err = Mesh::new(nodes, tris, &[]).unwrap_err();
        assert!(matches!(err, FemError::Conformity(_)), "{err}");
    }

    #[test]
    fn face_normals_point_out_of_left_triangle() {
        let m = unit_square_mesh(3).unwrap();
        for f in 0..m.n_faces() {
            let (t, _) = m.face_triangles(f);
            let c = m.centroid(t);
            let mid = m.face_midpoint(f);
            let nu = m.face_normal(f);
            assert!((mid[0] - c[0]) * nu[0] + (mid[1] - c[1]) * nu[1] > 0.0);
        }
    }

    #[test]
    fn lshape_area_and_tags() {
        let m = lshape_mesh(2).unwrap();
        assert!((m.total_area() - 3.0).abs() < 1e-13);
        assert_eq!(m.boundary_tags(), vec![1]);
        assert_eq!(3 * m.n_triangles(), 2 * m.interior_faces().len() + m.boundary_faces().len());
    }

    #[test]
    fn mesh1d_validation() {
        assert!(Mesh1D::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Mesh1D::new(vec![0.0, 0.5]).is_err());
        let m = Mesh1D::uniform(4).unwrap();
        assert_eq!(m.n_elements(), 4);
        let r = m.refine_marked(&[1]).unwrap();
        assert_eq!(r.nodes(), &[0.0, 0.25, 0.375, 0.5, 0.75, 1.0]);
    }
}
