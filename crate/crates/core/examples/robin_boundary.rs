//! Mixed boundary conditions: Dirichlet on the left, Neumann on top and
//! bottom and Robin on the right, with variable diffusion.

use std::sync::Arc;

use fekit::assembly::{constant, scalar, tensor, BoundaryCondition, CoefficientSet};
use fekit::elliptic::{solve_elliptic, EllipticProblem};
use fekit::mesh::unit_square_mesh;
use fekit::refelem::ElementKind;
use fekit::vtk::{save_vtk, VtkField};

fn main() -> fekit::Result<()> {
    let coeffs = CoefficientSet {
        diffusion: Some(tensor(|x| {
            let a = 1.0 + x[0] * x[1];
            [[a, 0.0], [0.0, a]]
        })),
        source: Some(constant(1.0)),
        ..Default::default()
    }
    .with_boundary(4, BoundaryCondition::Dirichlet(constant(0.0)))
    .with_boundary(1, BoundaryCondition::Neumann(constant(0.0)))
    .with_boundary(3, BoundaryCondition::Neumann(scalar(|x| x[0])))
    .with_boundary(2, BoundaryCondition::Robin { d: constant(2.0), g: constant(0.5) });
    for kind in [ElementKind::P1, ElementKind::P2] {
        let problem = EllipticProblem::new(Arc::new(unit_square_mesh(16)?), kind, coeffs.clone());
        let sol = solve_elliptic(&problem)?;
        let u = sol.u.eval_point([0.75, 0.5]).unwrap_or(f64::NAN);
        let iterations = sol.iterations.map_or("direct solve".to_string(), |i| format!("{i} CG iterations"));
        println!("{kind}: {iterations}, u(0.75, 0.5) = {u:.6}");
        if kind == ElementKind::P1 {
            let v = sol.u.vertex_values();
            let path = std::env::temp_dir().join("robin.vtk");
            save_vtk(&path, &problem.mesh, "robin", &[VtkField::PointScalar("u", &v)])?;
        }
    }
    Ok(())
}
