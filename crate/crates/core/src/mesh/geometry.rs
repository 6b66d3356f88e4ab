use crate::error::{FemError, Result};

use super::Point;

/// `x = A xi + b` from the reference triangle conv{(0,0),(1,0),(0,1)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub det: f64,
    /// `A^{-T}`
    pub a_inv_t: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn new(a: [[f64; 2]; 2], b: [f64; 2]) -> Result<Self> {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(det.abs() > 1e-14 * scale * scale) || !det.is_finite() {
            return Err(FemError::Geometry {
                triangle: usize::MAX,
                message: format!("singular affine map (det = {det:e})"),
            });
        }
        // A^{-1} = [[a11, -a01], [-a10, a00]] / det; transpose it
        let a_inv_t = [[a[1][1] / det, -a[1][0] / det], [-a[0][1] / det, a[0][0] / det]];
        Ok(AffineMap { a, b, det, a_inv_t })
    }

    pub fn from_vertices(p0: Point, p1: Point, p2: Point) -> Result<Self> {
        Self::new([[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]], p0)
    }

    pub fn identity() -> Self {
        Self::new([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]).expect("identity is regular")
    }

    /// Physical point of reference coordinates `xi`.
    pub fn map(&self, xi: Point) -> Point {
        [
            self.a[0][0] * xi[0] + self.a[0][1] * xi[1] + self.b[0],
            self.a[1][0] * xi[0] + self.a[1][1] * xi[1] + self.b[1],
        ]
    }

    /// Reference coordinates of a physical point.
    pub fn inverse(&self, x: Point) -> Point {
        let d = [x[0] - self.b[0], x[1] - self.b[1]];
        // A^{-1} = (A^{-T})^T
        [self.a_inv_t[0][0] * d[0] + self.a_inv_t[1][0] * d[1], self.a_inv_t[0][1] * d[0] + self.a_inv_t[1][1] * d[1]]
    }

    /// Physical gradient `A^{-T} g` of a reference gradient `g`.
    pub fn transform_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [self.a_inv_t[0][0] * g[0] + self.a_inv_t[0][1] * g[1], self.a_inv_t[1][0] * g[0] + self.a_inv_t[1][1] * g[1]]
    }
}

/// Applies `A^{-T}` to a list of reference gradients.
pub fn transform_gradients(map: &AffineMap, ref_grads: &[[f64; 2]]) -> Vec<[f64; 2]> {
    ref_grads.iter().map(|&g| map.transform_gradient(g)).collect()
}

/// Diameter, incircle diameter and their ratio for one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeMetrics {
    pub h: f64,
    pub rho: f64,
    pub sigma: f64,
}

impl ShapeMetrics {
    pub fn of_triangle(p0: Point, p1: Point, p2: Point) -> Result<Self> {
        let d = |a: Point, b: Point| (a[0] - b[0]).hypot(a[1] - b[1]);
        let (e0, e1, e2) = (d(p1, p2), d(p2, p0), d(p0, p1));
        let area = super::signed_area(p0, p1, p2).abs();
        let perimeter = e0 + e1 + e2;
        if !(area > 1e-14 * perimeter * perimeter) {
            return Err(FemError::Geometry { triangle: usize::MAX, message: "zero-area triangle".into() });
        }
        let h = e0.max(e1).max(e2);
        let rho = 4.0 * area / perimeter;
        Ok(ShapeMetrics { h, rho, sigma: h / rho })
    }
}
