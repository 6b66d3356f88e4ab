//! `-u'' = f` on (0, 1) with `u(0) = 0`, `u'(1) = 0`: nodal solution,
//! error norms and residual indicators on a uniform and a graded mesh.

use fekit::adapt::estimate_residual_1d;
use fekit::elliptic::{model_1d_errors, solve_model_1d};
use fekit::mesh::Mesh1D;
use fekit::problems::Model1d;

fn main() -> fekit::Result<()> {
    let ex = Model1d;
    let mut mesh = Mesh1D::uniform(4)?;
    println!("elements,l2,h1,eta");
    for _ in 0..6 {
        let f: Vec<f64> = mesh.nodes().iter().map(|&x| ex.f(x)).collect();
        let u = solve_model_1d(&mesh, &f)?;
        let e = model_1d_errors(&mesh, &u, |x| ex.u(x), |x| ex.du(x))?;
        let eta = estimate_residual_1d(&mesh, &u, |x| ex.f(x))?;
        println!("{},{:.4e},{:.4e},{:.4e}", mesh.n_elements(), e.l2, e.h1_semi, eta.global());
        // refine the half of the elements with the largest indicators
        let mut order: Vec<usize> = (0..eta.len()).collect();
        order.sort_by(|&a, &b| eta.local[b].total_cmp(&eta.local[a]));
        order.truncate(eta.len().div_ceil(2));
        mesh = mesh.refine_marked(&order)?;
    }
    Ok(())
}
