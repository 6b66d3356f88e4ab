//! Builds the L-shaped domain, bisects the triangles touching the re-entrant
//! corner a few times and reports how the shape regularity evolves.

use fekit::mesh::{lshape_mesh, Mesh};
use fekit::vtk::{save_vtk, VtkField};

fn worst_sigma(mesh: &Mesh) -> fekit::Result<f64> {
    Ok(mesh.shape_metrics()?.iter().map(|s| s.sigma).fold(0.0, f64::max))
}

fn main() -> fekit::Result<()> {
    let mut mesh = lshape_mesh(2)?;
    println!("round,triangles,nodes,faces,max_sigma");
    for round in 0..6 {
        println!("{round},{},{},{},{:.4}", mesh.n_triangles(), mesh.n_nodes(), mesh.n_faces(), worst_sigma(&mesh)?);
        let near_corner: Vec<usize> =
            (0..mesh.n_triangles()).filter(|&t| mesh.vertices(t).iter().any(|p| p[0].hypot(p[1]) < 1e-12)).collect();
        mesh = mesh.refine_marked(&near_corner)?;
    }
    let area: Vec<f64> = (0..mesh.n_triangles()).map(|t| mesh.area(t)).collect();
    let path = std::env::temp_dir().join("lshape_graded.vtk");
    save_vtk(&path, &mesh, "graded L-shape", &[VtkField::CellScalar("area", &area)])?;
    println!("wrote {}", path.display());
    Ok(())
}
