//! Symmetric interior penalty method: smallest coercive penalty on a coarse
//! mesh and convergence with the default penalty.

use std::sync::Arc;

use fekit::dg::{default_sip_penalty, min_coercive_penalty, sip_study, DgSpace};
use fekit::mesh::unit_square_mesh;
use fekit::problems::sinsin;

fn main() -> fekit::Result<()> {
    let candidates = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    for degree in 1..=2 {
        let space = DgSpace::new(Arc::new(unit_square_mesh(2)?), degree)?;
        let smallest = min_coercive_penalty(&space, &candidates)?;
        let eta = default_sip_penalty(degree);
        println!("# degree {degree}: smallest coercive penalty {smallest:?}, default {eta}");
        let table = sip_study(&[4, 8, 16, 32], degree, eta, &sinsin())?;
        print!("{}", table.to_csv_string());
    }
    Ok(())
}
