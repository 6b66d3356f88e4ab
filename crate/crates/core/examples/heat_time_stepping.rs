//! Heat equation with `u = exp(-t) sin(pi x) sin(pi y)`: temporal rates of
//! implicit Euler, Crank-Nicolson, dG(0) and dG(1) on a fixed mesh.

use std::sync::Arc;

use fekit::mesh::unit_square_mesh;
use fekit::parabolic::{time_study, TimeReference, TimeScheme};
use fekit::refelem::ElementKind;

fn main() -> fekit::Result<()> {
    let mesh = Arc::new(unit_square_mesh(16)?);
    println!("scheme,order,final_error,observed_rate");
    for scheme in TimeScheme::ALL {
        // compare with a much finer time discretisation on the same mesh so
        // that the spatial error does not mask the temporal one
        let table = time_study(&mesh, ElementKind::P1, scheme, 1.0, &[5, 10, 20], TimeReference::FineSteps(8))?;
        let err = table.errors("l2");
        println!("{scheme},{},{:.4e},{:.3}", scheme.order(), err[err.len() - 1], table.final_rate("l2"));
    }
    Ok(())
}
