use std::sync::Arc;

use approx::relative_eq;
use fekit::adapt::interpolate_loglog;
use fekit::dg::{average, jump};
use fekit::linalg::{dense_solve, lu_solve, CooBuilder};
use fekit::mesh::{parse_mesh, unit_square_mesh, write_mesh};
use fekit::mixed::{rt_l2_error, rt_project};
use fekit::quadrature::{integrate_cell, triangle_rule, TRIANGLE_ORDERS};
use fekit::refelem::{interpolate, ElementKind};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn marked_refinement_preserves_area_and_conformity(marks in prop::collection::vec(0usize..1000, 1..6), rounds in 1usize..6) {
        let mut mesh = unit_square_mesh(2).unwrap();
        for _ in 0..rounds {
            let marked: Vec<usize> = marks.iter().map(|m| m % mesh.n_triangles()).collect();
            let before = mesh.n_triangles();
            mesh = mesh.refine_marked(&marked).unwrap();
            prop_assert!(mesh.n_triangles() > before);
        }
        prop_assert!((mesh.total_area() - 1.0).abs() < 1e-12);
        // every face is shared by one (boundary) or two (interior) triangles
        let mut count = vec![0usize; mesh.n_faces()];
        for faces in mesh.triangle_faces() {
            for &f in faces {
                count[f] += 1;
            }
        }
        for (f, &c) in count.iter().enumerate() {
            prop_assert_eq!(c, if f < mesh.n_interior_faces() { 2 } else { 1 });
        }
    }

    #[test]
    fn quadrature_is_exact_on_random_polynomials(coeffs in prop::collection::vec(-2.0f64..2.0, 21), which in 0usize..4) {
        let order = TRIANGLE_ORDERS[which];
        let rule = triangle_rule(order).unwrap();
        let mesh = unit_square_mesh(1).unwrap();
        let map = mesh.affine_map(0).unwrap();
        // sum of c_ab x^a y^b with a + b <= order, integrated over a physical triangle
        let terms: Vec<(i32, i32, f64)> = (0..=order as i32)
            .flat_map(|a| (0..=order as i32 - a).map(move |b| (a, b)))
            .zip(&coeffs)
            .map(|((a, b), &c)| (a, b, c))
            .collect();
        let p = |x: [f64; 2]| terms.iter().map(|&(a, b, c)| c * x[0].powi(a) * x[1].powi(b)).sum::<f64>();
        let fine = triangle_rule(5).unwrap();
        // split the triangle into four similar ones and integrate with the exact order-5 rule
        let v = mesh.vertices(0);
        let m = |i: usize, j: usize| [(v[i][0] + v[j][0]) / 2.0, (v[i][1] + v[j][1]) / 2.0];
        let subs = [[v[0], m(0, 1), m(0, 2)], [m(0, 1), v[1], m(1, 2)], [m(0, 2), m(1, 2), v[2]], [m(1, 2), m(0, 2), m(0, 1)]];
        let reference: f64 = subs
            .iter()
            .map(|s| integrate_cell(&fine, &fekit::mesh::AffineMap::from_vertices(s[0], s[1], s[2]).unwrap(), p))
            .sum();
        prop_assert!((integrate_cell(&rule, &map, p) - reference).abs() < 1e-12);
    }

    #[test]
    fn banded_lu_matches_elimination(n in 2usize..30, seed in prop::collection::vec(-1.0f64..1.0, 900)) {
        let mut b = CooBuilder::new(n, n);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let v = if i == j { 4.0 + seed[i * n + j] } else if (i as i64 - j as i64).abs() <= 2 { seed[i * n + j] } else { 0.0 };
                if v != 0.0 {
                    b.add(i, j, v);
                    dense[i][j] = v;
                }
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| seed[899 - i]).collect();
        let x = lu_solve(&b.finalize(), &rhs).unwrap();
        let y = dense_solve(dense, rhs).unwrap();
        for (p, q) in x.iter().zip(&y) {
            prop_assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn rt0_projection_reproduces_rt0_fields(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        // a + c x lies in RT0 on every triangle
        let mesh = Arc::new(unit_square_mesh(3).unwrap());
        let tau = move |x: [f64; 2]| [a + c * x[0], b + c * x[1]];
        let p = rt_project(&tau, &mesh).unwrap();
        prop_assert!(rt_l2_error(&p, &tau).unwrap() < 1e-12);
    }

    #[test]
    fn jump_and_average_identities(w1 in -10.0f64..10.0, w2 in -10.0f64..10.0) {
        prop_assert_eq!(jump(w1, Some(w1)), 0.0);
        prop_assert_eq!(average(w1, Some(w1)), w1);
        prop_assert_eq!(jump(w1, None), w1);
        prop_assert_eq!(average(w1, None), w1);
        prop_assert!((jump(w1, Some(w2)) + jump(w2, Some(w1))).abs() < 1e-12);
        // product rule [ab] = [a]{b} + {a}[b]
        let (b1, b2) = (w2 * 0.5 - 1.0, w1 + 2.0);
        let lhs = jump(w1 * b1, Some(w2 * b2));
        let rhs = jump(w1, Some(w2)) * average(b1, Some(b2)) + average(w1, Some(w2)) * jump(b1, Some(b2));
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn loglog_interpolation_is_exact_on_power_laws(p in 0.2f64..3.0, c in 0.1f64..10.0, n in 10usize..100_000) {
        let samples: Vec<(usize, f64)> = [10usize, 100, 1000, 10_000].iter().map(|&d| (d, c * (d as f64).powf(-p))).collect();
        let v = interpolate_loglog(&samples, n);
        prop_assert!(relative_eq!(v, c * (n as f64).powf(-p), max_relative = 1e-9));
    }

    #[test]
    fn interpolation_reproduces_p2_polynomials(q in prop::collection::vec(-2.0f64..2.0, 6)) {
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let f = move |x: [f64; 2]| q[0] + q[1] * x[0] + q[2] * x[1] + q[3] * x[0] * x[0] + q[4] * x[0] * x[1] + q[5] * x[1] * x[1];
        let u = interpolate(&mesh, ElementKind::P2, f.clone()).unwrap();
        for x in [[0.13, 0.71], [0.5, 0.5], [0.9, 0.05]] {
            prop_assert!((u.eval_point(x).unwrap() - f(x)).abs() < 1e-12);
        }
    }
}

#[test]
fn mesh_text_round_trip_after_refinement() {
    let mesh = unit_square_mesh(3).unwrap().refine_marked(&[0, 5, 7]).unwrap();
    let mut buf = Vec::new();
    write_mesh(&mesh, &mut buf).unwrap();
    let back = parse_mesh(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back.nodes(), mesh.nodes());
    assert_eq!(back.n_faces(), mesh.n_faces());
    assert_eq!(back.boundary_tags(), mesh.boundary_tags());
}
