//! Adaptive P1 solution of the L-shape corner problem, compared with uniform
//! refinement at matched numbers of unknowns.

use std::sync::Arc;

use fekit::adapt::{adaptive_loop, interpolate_loglog, uniform_history, AdaptiveOptions, Marking};
use fekit::elliptic::EllipticProblem;
use fekit::mesh::lshape_mesh;
use fekit::problems::lshape_corner;
use fekit::refelem::ElementKind;

fn main() -> fekit::Result<()> {
    let problem = EllipticProblem::poisson_dirichlet(Arc::new(lshape_mesh(2)?), ElementKind::P1, lshape_corner());
    let uniform = uniform_history(&problem, 5, Default::default())?;
    let samples: Vec<(usize, f64)> = uniform.iter().map(|r| (r.n_dofs, r.err_h1)).collect();
    for marking in [Marking::Max, Marking::Dorfler] {
        let opts = AdaptiveOptions { marking, max_cycles: 12, ..Default::default() };
        let result = adaptive_loop(&problem, opts)?;
        println!("# {marking:?} marking, theta = {}", opts.theta);
        println!("cycle,dofs,eta,h1_error,uniform_h1_error");
        for r in &result.history {
            let uni = interpolate_loglog(&samples, r.n_dofs);
            println!("{},{},{:.4e},{:.4e},{:.4e}", r.cycle, r.n_dofs, r.eta, r.err_h1, uni);
        }
        println!();
    }
    Ok(())
}
