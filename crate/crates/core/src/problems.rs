//! Manufactured solutions used by the solvers, studies and the CLI.

use std::f64::consts::PI;

use crate::assembly::{scalar, vector, ScalarField, VectorField};
use crate::mesh::Point;

/// Exact solution, its gradient and the matching source term.
#[derive(Clone)]
pub struct Manufactured {
    pub u: ScalarField,
    pub grad: VectorField,
    pub f: ScalarField,
}

/// `u = sin(pi x) sin(pi y)` with `-Laplace u = 2 pi^2 u`, zero on the unit square boundary.
pub fn sinsin() -> Manufactured {
    Manufactured {
        u: scalar(|p| (PI * p[0]).sin() * (PI * p[1]).sin()),
        grad: vector(|p| [PI * (PI * p[0]).cos() * (PI * p[1]).sin(), PI * (PI * p[0]).sin() * (PI * p[1]).cos()]),
        f: scalar(|p| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin()),
    }
}

/// Angle in `[0, 2 pi)`.
fn angle(p: Point) -> f64 {
    let t = p[1].atan2(p[0]);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

/// Reentrant-corner solution `r^{2/3} sin(2 theta / 3)` on the L-shaped
/// domain `(-1,1)^2 \ [0,1) x (-1,0]`; harmonic, so `f = 0`.
pub fn lshape_corner() -> Manufactured {
    let a = 2.0 / 3.0;
    Manufactured {
        u: scalar(move |p| {
            let r = p[0].hypot(p[1]);
            r.powf(a) * (a * angle(p)).sin()
        }),
        grad: vector(move |p| {
            let r = p[0].hypot(p[1]);
            if r == 0.0 {
                return [0.0, 0.0];
            }
            let t = angle(p);
            let s = a * r.powf(a - 1.0);
            [s * ((a - 1.0) * t).sin(), s * ((a - 1.0) * t).cos()]
        }),
        f: scalar(|_| 0.0),
    }
}

/// `u = x (1 - x) y (1 - y)`, a quadratic-in-each-variable Poisson solution.
pub fn polynomial_bubble() -> Manufactured {
    Manufactured {
        u: scalar(|p| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1])),
        grad: vector(|p| [(1.0 - 2.0 * p[0]) * p[1] * (1.0 - p[1]), p[0] * (1.0 - p[0]) * (1.0 - 2.0 * p[1])]),
        f: scalar(|p| 2.0 * (p[0] * (1.0 - p[0]) + p[1] * (1.0 - p[1]))),
    }
}

/// `u = sin(pi x / 2)` for the 1D model problem `-u'' = f`, `u(0) = 0`, `u'(1) = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Model1d;

impl Model1d {
    pub fn u(&self, x: f64) -> f64 {
        (0.5 * PI * x).sin()
    }

    pub fn du(&self, x: f64) -> f64 {
        0.5 * PI * (0.5 * PI * x).cos()
    }

    pub fn f(&self, x: f64) -> f64 {
        0.25 * PI * PI * self.u(x)
    }
}

/// Space-time solution `e^{-t} sin(pi x) sin(pi y)` of the heat equation.
#[derive(Clone, Copy, Debug, Default)]
pub struct HeatDecay;

impl HeatDecay {
    pub fn u(&self, t: f64, p: Point) -> f64 {
        (-t).exp() * (PI * p[0]).sin() * (PI * p[1]).sin()
    }

    pub fn f(&self, t: f64, p: Point) -> f64 {
        (2.0 * PI * PI - 1.0) * self.u(t, p)
    }
}

/// Smooth advection-reaction test: `beta = (1, 1/2)`, `mu = 1`,
/// `u = sin(pi x) sin(pi y)`, which vanishes on the inflow boundary.
#[derive(Clone)]
pub struct AdvectionProblem {
    pub beta: VectorField,
    pub mu: f64,
    pub exact: Manufactured,
}

pub fn advection_smooth() -> AdvectionProblem {
    let beta = [1.0, 0.5];
    let mu = 1.0;
    let base = sinsin();
    let (u, g) = (base.u.clone(), base.grad.clone());
    AdvectionProblem {
        beta: vector(move |_| beta),
        mu,
        exact: Manufactured {
            u: base.u,
            grad: base.grad,
            f: scalar(move |p| {
                let gr = g(p);
                mu * u(p) + beta[0] * gr[0] + beta[1] * gr[1]
            }),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_solution_vanishes_on_reentrant_edges() {
        let m = lshape_corner();
        assert!((m.u)([0.5, 0.0]).abs() < 1e-15);
        assert!((m.u)([0.0, -0.5]).abs() < 1e-15);
        assert!((m.u)([-0.5, 0.5]) > 0.0);
    }

    #[test]
    fn corner_gradient_matches_differences() {
        let m = lshape_corner();
        let p = [-0.3, 0.4];
        let h = 1e-6;
        let fd = [
            ((m.u)([p[0] + h, p[1]]) - (m.u)([p[0] - h, p[1]])) / (2.0 * h),
            ((m.u)([p[0], p[1] + h]) - (m.u)([p[0], p[1] - h])) / (2.0 * h),
        ];
        let g = (m.grad)(p);
        assert!((fd[0] - g[0]).abs() < 1e-7 && (fd[1] - g[1]).abs() < 1e-7);
    }
}
