//! Convergence of P1 and P2 elements for `-Laplace u = f` with
//! `u = sin(pi x) sin(pi y)` on the unit square.

use std::sync::Arc;

use fekit::elliptic::{convergence_study, EllipticProblem, StudyMode};
use fekit::mesh::unit_square_mesh;
use fekit::problems::sinsin;
use fekit::refelem::ElementKind;

fn main() -> fekit::Result<()> {
    for kind in [ElementKind::P1, ElementKind::P2] {
        let table = convergence_study(&[4, 8, 16, 32], StudyMode::Solve, |n| {
            Ok(EllipticProblem::poisson_dirichlet(Arc::new(unit_square_mesh(n)?), kind, sinsin()))
        })?;
        println!("# {kind}");
        print!("{}", table.to_csv_string());
        println!("final rates: L2 {:.3}, H1 {:.3}\n", table.final_rate("l2"), table.final_rate("h1"));
    }
    Ok(())
}
