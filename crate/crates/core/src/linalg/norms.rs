use crate::error::{FemError, Result};
use crate::mesh::Point;
use crate::quadrature::triangle_rule_at_least;
use crate::refelem::{FeFunction, ReferenceElement};

/// L2 and H1-seminorm errors of a scalar finite element function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_semi: f64,
}

/// Quadrature order used for errors of degree-`k` functions: `2k + 2`,
/// served by the highest tabulated rule when larger than 5.
pub fn error_rule_order(degree: usize) -> usize {
    (2 * degree + 2).min(5)
}

/// `||u - u_h||_{L2}` and `|u - u_h|_{H1}` by elementwise quadrature.
pub fn energy_norms(
    uh: &FeFunction,
    u_exact: impl Fn(Point) -> f64,
    grad_exact: impl Fn(Point) -> [f64; 2],
) -> Result<ErrorNorms> {
    energy_norms_with_order(uh, u_exact, grad_exact, error_rule_order(uh.kind().degree()))
}

pub fn energy_norms_with_order(
    uh: &FeFunction,
    u_exact: impl Fn(Point) -> f64,
    grad_exact: impl Fn(Point) -> [f64; 2],
    order: usize,
) -> Result<ErrorNorms> {
    if !uh.kind().is_scalar() {
        return Err(FemError::UnsupportedElement(format!("energy norms need a scalar function, got {}", uh.kind())));
    }
    let mesh = uh.mesh();
    let reference = ReferenceElement::of_kind(uh.kind())?;
    let rule = triangle_rule_at_least(order);
    let tab = reference.tabulate(&rule);
    let pts: Vec<Point> = rule.reference_points().collect();
    let (mut l2, mut h1) = (0.0, 0.0);
    let c = uh.coefficients();
    for t in 0..mesh.n_triangles() {
        let map = mesh.affine_map(t)?;
        let dofs = uh.cell_dofs(t);
        let (mut el2, mut eh1) = (0.0, 0.0);
        for q in 0..rule.len() {
            let x = map.map(pts[q]);
            let mut v = 0.0;
            let mut g = [0.0; 2];
            for (i, &d) in dofs.iter().enumerate() {
                v += c[d] * tab.values[q][i];
                let pg = map.transform_gradient(tab.grads[q][i]);
                g[0] += c[d] * pg[0];
                g[1] += c[d] * pg[1];
            }
            let e = u_exact(x) - v;
            let ge = grad_exact(x);
            el2 += rule.weights[q] * e * e;
            eh1 += rule.weights[q] * ((ge[0] - g[0]).powi(2) + (ge[1] - g[1]).powi(2));
        }
        l2 += map.det * el2;
        h1 += map.det * eh1;
    }
    Ok(ErrorNorms { l2: l2.sqrt(), h1_semi: h1.sqrt() })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::unit_square_mesh;
    use crate::refelem::{interpolate, ElementKind};

    #[test]
    fn linear_interpolant_has_no_error() {
        let mesh = Arc::new(unit_square_mesh(3).unwrap());
        let u = |p: Point| 1.0 + 2.0 * p[0] - p[1];
        let uh = interpolate(&mesh, ElementKind::P1, u).unwrap();
        let e = energy_norms(&uh, u, |_| [2.0, -1.0]).unwrap();
        assert!(e.l2 < 1e-12 && e.h1_semi < 1e-12);
    }

    #[test]
    fn zero_exact_gives_self_norm() {
        let mesh = Arc::new(unit_square_mesh(1).unwrap());
        let uh = interpolate(&mesh, ElementKind::P1, |_| 2.0).unwrap();
        let e = energy_norms(&uh, |_| 0.0, |_| [0.0, 0.0]).unwrap();
        assert!((e.l2 - 2.0).abs() < 1e-14);
        assert!(e.h1_semi < 1e-14);
    }
}
