use std::sync::Arc;

use fekit::linalg::SparseMatrix;
use fekit::mesh::unit_square_mesh;
use fekit::parabolic::{solve_heat, step_dg0, step_dg1, step_implicit_euler, HeatOperators, HeatProblem, TimeScheme};
use fekit::problems::HeatDecay;
use fekit::refelem::{interpolate, ElementKind};
use fekit::study::RateTable;

fn scalar(v: f64) -> SparseMatrix {
    SparseMatrix::from_dense(&[vec![v]])
}

#[test]
fn pure_mass_step_is_identity() {
    let m = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
    let k = SparseMatrix::zeros(2, 2);
    let u = step_implicit_euler(&m, &k, &[0.3, -1.2], 0.1, &[0.0, 0.0]).unwrap();
    assert!((u[0] - 0.3).abs() < 1e-14 && (u[1] + 1.2).abs() < 1e-14);
}

#[test]
fn dg1_scalar_step_matches_hand_solved_block() {
    let (lambda, dt) = (3.0, 0.2);
    let z = lambda * dt;
    let step = step_dg1(&scalar(1.0), &scalar(lambda), &[1.0], dt, &[0.0], &[0.0]).unwrap();
    // [[1 + z, 1 + z/2], [z/2, 1/2 + z/3]] (u0; u1) = (1; 0) by Cramer's rule
    let det = (1.0 + z) * (0.5 + z / 3.0) - (1.0 + z / 2.0) * z / 2.0;
    let u0 = (0.5 + z / 3.0) / det;
    let u1 = -(z / 2.0) / det;
    assert!((step.u0[0] - u0).abs() < 1e-13 && (step.u1[0] - u1).abs() < 1e-13);
    assert!((step.end_value()[0] - (6.0 - 2.0 * z) / (6.0 + 4.0 * z + z * z)).abs() < 1e-13);
}

#[test]
fn dg0_uses_the_time_average_of_the_source() {
    // f(t) = t on [t0, t0 + k]: dG(0) sees k (t0 + k/2), Euler k (t0 + k)
    let (lambda, t0, dt) = (2.0, 0.5, 0.1);
    let (m, k) = (scalar(1.0), scalar(lambda));
    let dg0 = step_dg0(&m, &k, &[1.0], dt, &[dt * (t0 + dt / 2.0)]).unwrap()[0];
    let euler = step_implicit_euler(&m, &k, &[1.0], dt, &[t0 + dt]).unwrap()[0];
    assert!(((euler - dg0) - dt * dt / 2.0 / (1.0 + lambda * dt)).abs() < 1e-14);
}

#[test]
fn time_constant_source_makes_dg0_and_euler_agree() {
    let mesh = Arc::new(unit_square_mesh(6).unwrap());
    let run = |scheme| {
        let mut p = HeatProblem::decay(Arc::clone(&mesh), ElementKind::P1, scheme, 0.5, 10).unwrap();
        p.f = Arc::new(|_, x| 1.0 + x[0] * x[1]);
        solve_heat(&p, None).unwrap()
    };
    let (a, b) = (run(TimeScheme::ImplicitEuler), run(TimeScheme::Dg0));
    for (x, y) in a.final_state().iter().zip(b.final_state()) {
        assert!((x - y).abs() < 1e-13);
    }
}

#[test]
fn energy_decays_every_step_without_source() {
    let mesh = Arc::new(unit_square_mesh(4).unwrap());
    for kind in [ElementKind::P1, ElementKind::P2] {
        for scheme in TimeScheme::ALL {
            let mut p = HeatProblem::decay(Arc::clone(&mesh), kind, scheme, 1.0, 4).unwrap();
            p.f = Arc::new(|_, _| 0.0);
            let sol = solve_heat(&p, None).unwrap();
            assert!(sol.energy.windows(2).all(|w| w[1] <= w[0]), "{kind} {scheme}");
        }
    }
}

#[test]
fn dg1_initial_jump_vanishes_as_steps_shrink() {
    let mesh = Arc::new(unit_square_mesh(8).unwrap());
    let p = HeatProblem::decay(Arc::clone(&mesh), ElementKind::P1, TimeScheme::Dg1, 1.0, 1).unwrap();
    let ops = HeatOperators::new(&mesh, ElementKind::P1, &p.coeffs).unwrap();
    let ex = HeatDecay;
    let u_prev = ops.restrict(interpolate(&mesh, ElementKind::P1, |x| ex.u(0.0, x)).unwrap().coefficients());
    let mut jumps = Vec::new();
    for dt in [0.2, 0.1, 0.05, 0.025] {
        // source moments by the trapezoidal rule are enough for this trend
        let f_start = ops.load(&|x| ex.f(0.0, x)).unwrap();
        let f_end = ops.load(&|x| ex.f(dt, x)).unwrap();
        let f0: Vec<f64> = f_start.iter().zip(&f_end).map(|(a, b)| dt * (a + b) / 2.0).collect();
        let f1: Vec<f64> = f_end.iter().map(|b| dt * b / 2.0).collect();
        let step = step_dg1(&ops.mass, &ops.stiffness, &u_prev, dt, &f0, &f1).unwrap();
        let d: Vec<f64> = step.u0.iter().zip(&u_prev).map(|(a, b)| a - b).collect();
        jumps.push(ops.energy(&d).sqrt());
    }
    assert!(jumps.windows(2).all(|w| w[1] < 0.75 * w[0]), "{jumps:?}");
}

#[test]
fn spatial_rate_with_small_time_steps() {
    let ex = HeatDecay;
    let mut table = RateTable::new(&["l2"]);
    for n in [4, 8, 16] {
        let mesh = Arc::new(unit_square_mesh(n).unwrap());
        let p = HeatProblem::decay(Arc::clone(&mesh), ElementKind::P1, TimeScheme::Dg0, 0.1, 400).unwrap();
        let sol = solve_heat(&p, Some(&|t, x| ex.u(t, x))).unwrap();
        let err = *sol.errors.as_ref().unwrap().last().unwrap();
        table.push(mesh.h_max(), p.grid.n_steps(), vec![err]);
    }
    let rate = table.final_rate("l2");
    assert!((1.8..=2.2).contains(&rate), "{rate}");
}
