//! Lowest-order Raviart-Thomas mixed method: convergence and elementwise
//! conservation, with the flux written to a VTK file.

use std::sync::Arc;

use fekit::mesh::unit_square_mesh;
use fekit::mixed::{assemble_mixed, mixed_study, solve_mixed};
use fekit::problems::sinsin;
use fekit::vtk::{save_vtk, VtkField};

fn main() -> fekit::Result<()> {
    let exact = sinsin();
    let (table, defect) = mixed_study(&[4, 8, 16, 32], &exact)?;
    print!("{}", table.to_csv_string());
    println!("largest conservation defect: {defect:.2e}");

    let mesh = Arc::new(unit_square_mesh(16)?);
    let sol = solve_mixed(&assemble_mixed(&mesh, &|x| (exact.f)(x))?)?;
    let (u, sigma) = (sol.u.cell_values(), sol.sigma.cell_vectors());
    let path = std::env::temp_dir().join("mixed_rt0.vtk");
    save_vtk(&path, &mesh, "mixed", &[VtkField::CellScalar("u", &u), VtkField::CellVector("sigma", &sigma)])?;
    println!("wrote {}", path.display());
    Ok(())
}
