use std::sync::Arc;

use fekit::assembly::{constant, vector};
use fekit::dg::{
    assemble_dg_advection, assemble_sip, cell_l2_squared, min_coercive_penalty, sip_errors, sip_study, solve_sip,
    AdvectionData, DgSpace, Flux, SipData,
};
use fekit::mesh::unit_square_mesh;
use fekit::problems::sinsin;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quadratic_form(a: &fekit::linalg::SparseMatrix, v: &[f64]) -> f64 {
    v.iter().zip(a.matvec(v)).map(|(x, y)| x * y).sum()
}

#[test]
fn advection_form_dominates_the_dg_norm() {
    let space = DgSpace::new(Arc::new(unit_square_mesh(3).unwrap()), 1).unwrap();
    let data = AdvectionData { beta: vector(|_| [1.0, 0.5]), mu: 1.0, f: constant(0.0), inflow: None };
    let mu0 = data.coercivity_constant(space.mesh());
    assert!((mu0 - 1.0).abs() < 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for flux in [Flux::Centered, Flux::Upwind] {
        let a = assemble_dg_advection(&space, &data, flux, 1.0).unwrap().matrix;
        for _ in 0..20 {
            let v: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l2: f64 = cell_l2_squared(&space, &v).unwrap().iter().sum();
            let mut boundary = 0.0;
            for face in space.mesh().n_interior_faces()..space.mesh().n_faces() {
                let ctx = space.face(face).unwrap();
                let (tr, _) = ctx.traces(&space, &v);
                let bn = (ctx.normal[0] + 0.5 * ctx.normal[1]).abs();
                boundary += ctx.weights.iter().zip(&tr).map(|(w, t)| w * bn * t * t).sum::<f64>();
            }
            let lower = mu0 * l2 + 0.5 * boundary;
            let form = quadratic_form(&a, &v);
            assert!(form >= lower - 1e-10 * lower, "{flux:?}: {form} < {lower}");
            if flux == Flux::Centered {
                // centered fluxes give the identity exactly
                assert!((form - lower).abs() < 1e-10 * lower);
            }
        }
    }
}

#[test]
fn penalty_sweep_finds_coercive_threshold() {
    let space = DgSpace::new(Arc::new(unit_square_mesh(2).unwrap()), 1).unwrap();
    let eta_min = min_coercive_penalty(&space, &[0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]).unwrap().unwrap();
    assert!(eta_min > 0.25);
    let data = SipData { f: constant(0.0), g: None };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for eta in [eta_min, 2.0 * eta_min, 10.0] {
        let a = assemble_sip(&space, &data, eta).unwrap().matrix;
        for _ in 0..20 {
            let v: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(quadratic_form(&a, &v) > 0.0);
        }
    }
}

#[test]
fn sip_errors_are_robust_in_the_penalty() {
    let space = DgSpace::new(Arc::new(unit_square_mesh(8).unwrap()), 1).unwrap();
    let ex = sinsin();
    let data = SipData::from_manufactured(&ex);
    let e10 = sip_errors(&space, &solve_sip(&space, &data, 10.0).unwrap(), &ex).unwrap();
    let e100 = sip_errors(&space, &solve_sip(&space, &data, 100.0).unwrap(), &ex).unwrap();
    for (a, b) in [(e10.energy, e100.energy), (e10.l2, e100.l2)] {
        assert!(a / b < 3.0 && b / a < 3.0, "{a} vs {b}");
    }
}

#[test]
fn sip_quadratic_energy_rate() {
    let table = sip_study(&[4, 8, 16], 2, 40.0, &sinsin()).unwrap();
    let rate = table.final_rate("energy");
    assert!((1.85..=2.15).contains(&rate), "{rate}");
}
