use std::collections::HashMap;

use super::{edge_key, Mesh, Point};
use crate::error::{FemError, Result};

impl Mesh {
    /// Red refinement: every triangle is split into four similar children
    /// through its edge midpoints.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let n_old = self.n_nodes();
        let mut nodes = self.nodes.clone();
        nodes.reserve(self.n_faces());
        for f in 0..self.n_faces() {
            nodes.push(self.face_midpoint(f));
        }
        let mid = |face: usize| n_old + face;
        let mut triangles = Vec::with_capacity(4 * self.n_triangles());
        for (t, &[v0, v1, v2]) in self.triangles.iter().enumerate() {
            let faces = self.triangle_faces[t];
            let (m12, m20, m01) = (mid(faces[0]), mid(faces[1]), mid(faces[2]));
            triangles.push([v0, m01, m20]);
            triangles.push([m01, v1, m12]);
            triangles.push([m20, m12, v2]);
            triangles.push([m12, m20, m01]);
        }
        let boundary = self.split_boundary(|face| Some(mid(face)));
        Mesh::new(nodes, triangles, &boundary)
    }

    /// Newest-vertex bisection of the marked triangles plus the closure
    /// needed to keep the mesh conforming.
    ///
    /// Triangle `(v0, v1, v2)` is bisected through the midpoint `m` of its
    /// refinement edge `(v0, v1)` into `(v2, v0, m)` and `(v1, v2, m)`; the
    /// new vertex `m` is opposite the children's refinement edges.
    pub fn refine_marked(&self, marked: &[usize]) -> Result<Mesh> {
        let nt = self.n_triangles();
        let mut edge_marked = vec![false; self.n_faces()];
        for &t in marked {
            if t >= nt {
                return Err(FemError::InvalidArgument(format!("marked triangle {t} out of range ({nt} triangles)")));
            }
            edge_marked[self.triangle_faces[t][2]] = true;
        }
        if !edge_marked.iter().any(|&m| m) {
            return Ok(self.clone());
        }

        // Closure: a triangle with any marked edge must have its refinement edge marked.
        let mut sweeps = 0;
        loop {
            let mut changed = false;
            for faces in &self.triangle_faces {
                if !edge_marked[faces[2]] && (edge_marked[faces[0]] || edge_marked[faces[1]]) {
                    edge_marked[faces[2]] = true;
                    changed = true;
                }
            }
            sweeps += 1;
            if !changed {
                break;
            }
            if sweeps > nt + 1 {
                return Err(FemError::Conformity("bisection closure did not terminate".into()));
            }
        }

        let mut nodes: Vec<Point> = self.nodes.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut face_mid = vec![None; self.n_faces()];
        for (f, &m) in edge_marked.iter().enumerate() {
            if m {
                let [a, b] = self.face_nodes(f);
                midpoint.insert(edge_key(a, b), nodes.len());
                face_mid[f] = Some(nodes.len());
                nodes.push(self.face_midpoint(f));
            }
        }

        let mut triangles = Vec::with_capacity(nt + 2 * midpoint.len());
        let mut stack = Vec::new();
        for &tri in &self.triangles {
            stack.push(tri);
            while let Some([v0, v1, v2]) = stack.pop() {
                match midpoint.get(&edge_key(v0, v1)) {
                    Some(&m) => {
                        stack.push([v1, v2, m]);
                        stack.push([v2, v0, m]);
                    }
                    None => triangles.push([v0, v1, v2]),
                }
            }
        }
        let boundary = self.split_boundary(|face| face_mid[face]);
        Mesh::from_oriented(nodes, triangles, &boundary)
    }

    fn split_boundary(&self, mid: impl Fn(usize) -> Option<usize>) -> Vec<(usize, usize, u32)> {
        let n_int = self.n_interior_faces();
        let mut out = Vec::with_capacity(2 * self.boundary_faces.len());
        for (i, f) in self.boundary_faces.iter().enumerate() {
            let [a, b] = f.nodes;
            match mid(n_int + i) {
                Some(m) => {
                    out.push((a, m, f.tag));
                    out.push((m, b, f.tag));
                }
                None => out.push((a, b, f.tag)),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use crate::mesh::{build_face_topology, unit_square_mesh};

    #[test]
    fn uniform_refinement_counts_and_area() {
        let m = unit_square_mesh(1).unwrap();
        let r = m.refine_uniform().unwrap();
        assert_eq!(r.n_triangles(), 8);
        assert!((r.total_area() - 1.0).abs() < 1e-12);
        assert!((r.h_max() - 0.5 * m.h_max()).abs() < 1e-14);
    }

    #[test]
    fn uniform_refinement_keeps_tags() {
        let m = unit_square_mesh(2).unwrap().refine_uniform().unwrap();
        assert_eq!(m.boundary_tags(), vec![1, 2, 3, 4]);
        for f in m.boundary_faces() {
            let mid = [
                0.5 * (m.nodes()[f.nodes[0]][0] + m.nodes()[f.nodes[1]][0]),
                0.5 * (m.nodes()[f.nodes[0]][1] + m.nodes()[f.nodes[1]][1]),
            ];
            let expect = if mid[1] == 0.0 {
                1
            } else if mid[0] == 1.0 {
                2
            } else if mid[1] == 1.0 {
                3
            } else {
                4
            };
            assert_eq!(f.tag, expect);
        }
    }

    #[test]
    fn empty_marking_is_identity() {
        let m = unit_square_mesh(2).unwrap();
        let r = m.refine_marked(&[]).unwrap();
        assert_eq!(r.nodes(), m.nodes());
        assert_eq!(r.triangles(), m.triangles());
    }

    #[test]
    fn marking_all_bisects_everything() {
        let m = unit_square_mesh(2).unwrap();
        let all: Vec<usize> = (0..m.n_triangles()).collect();
        let r = m.refine_marked(&all).unwrap();
        assert!(r.n_triangles() >= 2 * m.n_triangles());
        assert!((r.total_area() - 1.0).abs() < 1e-12);
        let max_area = (0..r.n_triangles()).map(|t| r.area(t)).fold(0.0, f64::max);
        assert!(max_area <= 0.5 * m.area(0) + 1e-14);
    }

    #[test]
    fn single_interior_mark_stays_conforming() {
        let m = unit_square_mesh(2).unwrap();
        let r = m.refine_marked(&[3]).unwrap();
        let topo = build_face_topology(r.triangles()).unwrap();
        assert_eq!(3 * r.n_triangles(), 2 * topo.interior.len() + topo.boundary.len());
        // every boundary-count edge lies on the square boundary
        for f in &topo.boundary {
            let [a, b] = f.nodes.map(|i| r.nodes()[i]);
            let on_side = |k: usize, v: f64| a[k] == v && b[k] == v;
            assert!(on_side(0, 0.0) || on_side(0, 1.0) || on_side(1, 0.0) || on_side(1, 1.0));
        }
        assert!(r.n_triangles() > m.n_triangles());
    }

    #[test]
    fn out_of_range_mark_rejected() {
        let m = unit_square_mesh(1).unwrap();
        assert!(m.refine_marked(&[5]).is_err());
    }
}
