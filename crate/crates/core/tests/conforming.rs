use std::sync::Arc;

use fekit::assembly::{constant, vector};
use fekit::elliptic::{convergence_study, model_1d_errors, solve_model_1d, EllipticProblem, StudyMode};
use fekit::mesh::{unit_square_mesh, Mesh1D};
use fekit::problems::{sinsin, Manufactured};
use fekit::refelem::ElementKind;

#[test]
fn one_d_constant_load_is_nodally_exact_and_second_order() {
    let u = |x: f64| x - x * x / 2.0;
    let du = |x: f64| 1.0 - x;
    let mut l2 = Vec::new();
    for n in [4, 8, 16, 32] {
        let mesh = Mesh1D::uniform(n).unwrap();
        let uh = solve_model_1d(&mesh, &vec![1.0; n + 1]).unwrap();
        let nodal = mesh.nodes().iter().zip(&uh).map(|(&x, v)| (u(x) - v).abs()).fold(0.0, f64::max);
        assert!(nodal < 1e-12, "nodal error {nodal}");
        l2.push(model_1d_errors(&mesh, &uh, u, du).unwrap().l2);
    }
    for w in l2.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.8..=4.2).contains(&ratio), "L2 ratio {ratio}");
    }
}

#[test]
fn interpolant_study_gives_the_same_rates() {
    for kind in [ElementKind::P1, ElementKind::P2] {
        let build = |n| Ok(EllipticProblem::poisson_dirichlet(Arc::new(unit_square_mesh(n)?), kind, sinsin()));
        let solved = convergence_study(&[4, 8, 16], StudyMode::Solve, build).unwrap();
        let interp = convergence_study(&[4, 8, 16], StudyMode::InterpolantOnly, build).unwrap();
        for col in ["l2", "h1"] {
            let (a, b) = (solved.final_rate(col), interp.final_rate(col));
            assert!((a - b).abs() < 0.15, "{kind} {col}: {a} vs {b}");
        }
    }
}

#[test]
fn zero_solution_flags_undefined_rates() {
    let zero = Manufactured { u: constant(0.0), grad: vector(|_| [0.0, 0.0]), f: constant(0.0) };
    let table = convergence_study(&[2, 4, 8], StudyMode::Solve, |n| {
        Ok(EllipticProblem::poisson_dirichlet(Arc::new(unit_square_mesh(n)?), ElementKind::P1, zero.clone()))
    })
    .unwrap();
    assert!(table.errors("l2").iter().chain(&table.errors("h1")).all(|e| *e <= 1e-12));
    assert!(table.has_undefined_rates());
    assert!(table.final_rate("l2").is_nan());
}
