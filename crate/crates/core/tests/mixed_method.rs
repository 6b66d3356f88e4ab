use std::sync::Arc;

use fekit::linalg::dense_solve;
use fekit::mesh::{unit_square_mesh, Mesh};
use fekit::mixed::{assemble_mixed, mixed_errors, rt_l2_error, rt_project, solve_mixed};
use fekit::problems::sinsin;
use fekit::study::RateTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn flux_mass_matrix_is_symmetric_positive_definite() {
    let sys = assemble_mixed(&Arc::new(unit_square_mesh(3).unwrap()), &|_| 1.0).unwrap();
    assert!(sys.a.symmetry_deviation() < 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let x: Vec<f64> = (0..sys.n_faces()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q: f64 = x.iter().zip(sys.a.matvec(&x)).map(|(a, b)| a * b).sum();
        assert!(q > 0.0);
    }
}

#[test]
fn two_triangle_system_matches_dense_hand_assembly() {
    let mesh = Arc::new(
        Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], vec![[0, 1, 2], [1, 3, 2]], &[]).unwrap(),
    );
    let f = 3.0;
    let (nf, nt) = (mesh.n_faces(), mesh.n_triangles());
    assert_eq!((nf, nt), (5, 2));
    let n = nf + nt;
    let mut a = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for t in 0..nt {
        let v = mesh.vertices(t);
        let area = mesh.area(t);
        // psi_j = s_j (x - p_j) / (2|K|), p_j the vertex opposite local face j
        let psi = |j: usize, x: [f64; 2]| {
            let s = mesh.face_sign(t, j) / (2.0 * area);
            [s * (x[0] - v[j][0]), s * (x[1] - v[j][1])]
        };
        // edge midpoints integrate quadratics exactly
        let mids = [0, 1, 2].map(|i| {
            let (p, q) = (v[(i + 1) % 3], v[(i + 2) % 3]);
            [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]
        });
        let faces = mesh.triangle_faces()[t];
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = mids
                    .iter()
                    .map(|&x| {
                        let (pi, pj) = (psi(i, x), psi(j, x));
                        area / 3.0 * (pi[0] * pj[0] + pi[1] * pj[1])
                    })
                    .sum();
                a[faces[i]][faces[j]] += s;
            }
            // int_K div psi_j = s_j
            let b = mesh.face_sign(t, i);
            a[nf + t][faces[i]] += b;
            a[faces[i]][nf + t] += b;
        }
        rhs[nf + t] = -f * area;
    }
    let x = dense_solve(a, rhs).unwrap();
    let sys = assemble_mixed(&mesh, &|_| f).unwrap();
    let sol = solve_mixed(&sys).unwrap();
    let got: Vec<f64> = sol.sigma.coefficients().iter().chain(sol.u.coefficients()).copied().collect();
    for (p, q) in got.iter().zip(&x) {
        assert!((p - q).abs() < 1e-12, "{p} vs {q}");
    }
}

#[test]
fn projection_of_smooth_field_converges_linearly() {
    let ex = sinsin();
    let mut table = RateTable::new(&["proj"]);
    for n in [4, 8, 16] {
        let mesh = Arc::new(unit_square_mesh(n).unwrap());
        let p = rt_project(&|x| (ex.grad)(x), &mesh).unwrap();
        table.push(mesh.h_max(), mesh.n_faces(), vec![rt_l2_error(&p, &|x| (ex.grad)(x)).unwrap()]);
    }
    let rate = table.final_rate("proj");
    assert!((0.9..=1.1).contains(&rate), "{rate}");
}

#[test]
fn zero_data_gives_zero_errors() {
    let mesh = Arc::new(unit_square_mesh(4).unwrap());
    let sol = solve_mixed(&assemble_mixed(&mesh, &|_| 0.0).unwrap()).unwrap();
    let e = mixed_errors(&sol, &|_| 0.0, &|_| [0.0, 0.0], &|_| 0.0).unwrap();
    assert_eq!((e.l2_u, e.l2_sigma, e.hdiv_sigma), (0.0, 0.0, 0.0));
}

#[test]
fn hdiv_error_dominates_l2_flux_error() {
    let ex = sinsin();
    for n in [2, 4, 8] {
        let mesh = Arc::new(unit_square_mesh(n).unwrap());
        let sol = solve_mixed(&assemble_mixed(&mesh, &|x| (ex.f)(x)).unwrap()).unwrap();
        let e = mixed_errors(&sol, &|x| (ex.u)(x), &|x| (ex.grad)(x), &|x| -(ex.f)(x)).unwrap();
        assert!(e.l2_sigma <= e.hdiv_sigma);
    }
}
