//! Assembles the P1 Laplacian on refined meshes and compares conjugate
//! gradients with the banded direct solver.

use std::time::Instant;

use fekit::assembly::{
    assemble_load, assemble_stiffness, constant, dirichlet_values, CoefficientSet, ReducedSystem, RulePolicy,
};
use fekit::linalg::{cg_solve, lu_solve, norm2, CgOptions};
use fekit::mesh::unit_square_mesh;
use fekit::refelem::ElementKind;

fn main() -> fekit::Result<()> {
    let coeffs = CoefficientSet::poisson(constant(1.0)).with_dirichlet(&[1, 2, 3, 4], constant(0.0));
    println!("n,dofs,nnz,cg_iterations,cg_ms,lu_ms,max_difference");
    for n in [8, 16, 32, 64] {
        let mesh = unit_square_mesh(n)?;
        let k = assemble_stiffness(&mesh, ElementKind::P1, &coeffs, RulePolicy::Default)?;
        let f = assemble_load(&mesh, ElementKind::P1, &|_| 1.0, RulePolicy::Default)?;
        let fixed = dirichlet_values(&mesh, ElementKind::P1, &coeffs)?;
        let sys = ReducedSystem::new(&k, &f, &fixed);
        let (a, b) = (&sys.matrix, &sys.rhs);
        let t = Instant::now();
        let cg = cg_solve(a, b, CgOptions { tol: 1e-12, max_iter: None })?;
        let cg_ms = t.elapsed().as_secs_f64() * 1e3;
        let t = Instant::now();
        let x = lu_solve(a, b)?;
        let lu_ms = t.elapsed().as_secs_f64() * 1e3;
        let diff: Vec<f64> = cg.x.iter().zip(&x).map(|(p, q)| p - q).collect();
        println!("{n},{},{},{},{cg_ms:.2},{lu_ms:.2},{:.2e}", a.rows(), a.nnz(), cg.iterations, norm2(&diff));
    }
    Ok(())
}
