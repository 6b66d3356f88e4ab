//! Gauss rules on the reference triangle (barycentric form) and on `[0, 1]`.

use crate::error::{FemError, Result};
use crate::mesh::{AffineMap, Point};

/// Orders tabulated for the reference triangle.
pub const TRIANGLE_ORDERS: [usize; 4] = [1, 2, 3, 5];

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Barycentric coordinates `(z1, z2, z3)`; `z1` belongs to vertex `(0,0)`.
    pub points: Vec<[f64; 3]>,
    /// Weights summing to 1/2, the reference-triangle area.
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    /// Reference coordinates `(xi1, xi2) = (z2, z3)` of every point.
    pub fn reference_points(&self) -> impl Iterator<Item = Point> + '_ {
        self.points.iter().map(|z| [z[1], z[2]])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn cyclic(z: [f64; 3]) -> [[f64; 3]; 3] {
    [z, [z[2], z[0], z[1]], [z[1], z[2], z[0]]]
}

fn push_star(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, z: [f64; 3], w: f64) {
    for p in cyclic(z) {
        points.push(p);
        weights.push(w);
    }
}

/// The tabulated triangle rule of the given order.
///
/// Order 4 is served by the order-5 rule; order 0 by the order-1 rule.
pub fn triangle_rule(order: usize) -> Result<QuadratureRule> {
    let third = 1.0 / 3.0;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let order = match order {
        0 | 1 => {
            points.push([third; 3]);
            weights.push(0.5);
            1
        }
        2 => {
            push_star(&mut points, &mut weights, [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 6.0);
            2
        }
        3 => {
            points.push([third; 3]);
            weights.push(9.0 / 40.0);
            push_star(&mut points, &mut weights, [0.5, 0.5, 0.0], 2.0 / 30.0);
            push_star(&mut points, &mut weights, [0.0, 0.0, 1.0], 1.0 / 40.0);
            3
        }
        4 | 5 => {
            let s = 15f64.sqrt();
            points.push([third; 3]);
            weights.push(9.0 / 80.0);
            let a = (6.0 - s) / 21.0;
            push_star(&mut points, &mut weights, [a, a, (9.0 + 2.0 * s) / 21.0], (155.0 - s) / 2400.0);
            let b = (6.0 + s) / 21.0;
            push_star(&mut points, &mut weights, [b, b, (9.0 - 2.0 * s) / 21.0], (155.0 + s) / 2400.0);
            5
        }
        other => {
            return Err(FemError::InvalidArgument(format!(
                "no triangle rule of order {other}; supported orders are 1, 2, 3, 5 (4 maps to 5)"
            )))
        }
    };
    let sum: f64 = weights.iter().sum();
    assert!((sum - 0.5).abs() < 1e-14, "triangle rule of order {order} has weight sum {sum}, expected 1/2");
    Ok(QuadratureRule { points, weights, order })
}

/// The cheapest tabulated rule of order at least `order`, capped at 5.
pub fn triangle_rule_at_least(order: usize) -> QuadratureRule {
    triangle_rule(order.min(5)).expect("orders up to 5 are tabulated")
}

/// Gauss-Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EdgeRule {
    /// Exactness degree `2n - 1`.
    pub fn degree(&self) -> usize {
        2 * self.points.len() - 1
    }
}

pub fn edge_rule(n_points: usize) -> Result<EdgeRule> {
    let (points, weights) = match n_points {
        1 => (vec![0.5], vec![1.0]),
        2 => {
            let d = 0.5 / 3f64.sqrt();
            (vec![0.5 - d, 0.5 + d], vec![0.5, 0.5])
        }
        3 => {
            let d = 0.5 * (0.6f64).sqrt();
            (vec![0.5 - d, 0.5, 0.5 + d], vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
        }
        other => {
            return Err(FemError::InvalidArgument(format!("no edge rule with {other} points; supported: 1, 2, 3")))
        }
    };
    Ok(EdgeRule { points, weights })
}

/// Edge rule exact for polynomials of the given degree (capped at 5).
pub fn edge_rule_for_degree(degree: usize) -> EdgeRule {
    let n = (degree / 2 + 1).clamp(1, 3);
    edge_rule(n).expect("1 to 3 points are tabulated")
}

/// `det(A_K) * sum_k w_k f(T_K(xi_k))`.
pub fn integrate_cell(rule: &QuadratureRule, map: &AffineMap, f: impl Fn(Point) -> f64) -> f64 {
    map.det.abs() * rule.reference_points().zip(&rule.weights).map(|(xi, w)| w * f(map.map(xi))).sum::<f64>()
}

/// Integral over the segment `[a, b]` of a function of the physical point.
pub fn integrate_edge(rule: &EdgeRule, a: Point, b: Point, f: impl Fn(Point) -> f64) -> f64 {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    len * rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(&s, w)| w * f([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]))
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_centroid() {
        let r = triangle_rule(1).unwrap();
        assert_eq!(r.points, vec![[1.0 / 3.0; 3]]);
        assert_eq!(r.weights, vec![0.5]);
    }

    #[test]
    fn order_two_points() {
        let r = triangle_rule(2).unwrap();
        assert_eq!(r.len(), 3);
        for (z, w) in r.points.iter().zip(&r.weights) {
            assert_eq!(*w, 1.0 / 6.0);
            let mut s = *z;
            s.sort_by(f64::total_cmp);
            assert_eq!(s, [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]);
        }
    }

    #[test]
    fn order_five_weights() {
        let r = triangle_rule(5).unwrap();
        let s = 15f64.sqrt();
        assert_eq!(r.len(), 7);
        assert_eq!(r.weights[0], 9.0 / 80.0);
        assert!(r.weights[1..4].iter().all(|&w| w == (155.0 - s) / 2400.0));
        assert!(r.weights[4..7].iter().all(|&w| w == (155.0 + s) / 2400.0));
    }

    #[test]
    fn order_four_maps_to_five() {
        assert_eq!(triangle_rule(4).unwrap().order, 5);
        assert!(triangle_rule(6).is_err());
    }

    #[test]
    fn seven_point_order_three() {
        assert_eq!(triangle_rule(3).unwrap().len(), 7);
    }

    #[test]
    fn edge_rules() {
        let r1 = edge_rule(1).unwrap();
        assert_eq!((r1.points[0], r1.weights[0]), (0.5, 1.0));
        let r2 = edge_rule(2).unwrap();
        let cube: f64 = r2.points.iter().zip(&r2.weights).map(|(t, w)| w * t.powi(3)).sum();
        assert!((cube - 0.25).abs() < 1e-15);
        assert!(edge_rule(4).is_err());
    }

    #[test]
    fn cell_integrals() {
        let map = AffineMap::from_vertices([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]).unwrap();
        let r = triangle_rule(2).unwrap();
        // z1 = x on the reference triangle is the barycentric coordinate of vertex (1,0)
        let a = integrate_cell(&r, &map, |p| p[0] * p[0]);
        let b = integrate_cell(&r, &map, |p| p[0] * p[1]);
        assert!((a - 1.0 / 12.0).abs() < 1e-15);
        assert!((b - 1.0 / 24.0).abs() < 1e-15);
        let big = AffineMap::from_vertices([1.0, 1.0], [4.0, 1.5], [2.0, 3.0]).unwrap();
        let area = integrate_cell(&r, &big, |_| 1.0);
        assert!((area - 0.5 * big.det).abs() < 1e-14);
    }
}
