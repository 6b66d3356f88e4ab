//! Legacy ASCII VTK output (`UNSTRUCTURED_GRID` of triangles).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{FemError, Result};
use crate::mesh::Mesh;

/// A named data array attached to the points or the cells.
#[derive(Debug, Clone, Copy)]
pub enum VtkField<'a> {
    PointScalar(&'a str, &'a [f64]),
    CellScalar(&'a str, &'a [f64]),
    CellVector(&'a str, &'a [[f64; 2]]),
}

impl VtkField<'_> {
    fn check(&self, mesh: &Mesh) -> Result<()> {
        let (name, len, expected) = match self {
            VtkField::PointScalar(n, v) => (n, v.len(), mesh.n_nodes()),
            VtkField::CellScalar(n, v) => (n, v.len(), mesh.n_triangles()),
            VtkField::CellVector(n, v) => (n, v.len(), mesh.n_triangles()),
        };
        if len != expected {
            return Err(FemError::Dimension(format!("VTK field '{name}' has {len} values, expected {expected}")));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(FemError::InvalidArgument(format!("VTK field name '{name}' must be a single word")));
        }
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        "nan".into()
    }
}

/// Writes the mesh and fields; cell type 5 (triangle).
pub fn write_vtk(out: &mut impl Write, mesh: &Mesh, title: &str, fields: &[VtkField]) -> Result<()> {
    for f in fields {
        f.check(mesh)?;
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_nodes())?;
    for p in mesh.nodes() {
        writeln!(out, "{} {} 0", fmt(p[0]), fmt(p[1]))?;
    }
    let nt = mesh.n_triangles();
    writeln!(out, "CELLS {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    write_sections(out, fields, mesh.n_nodes(), nt)
}

fn write_sections(out: &mut impl Write, fields: &[VtkField], n_points: usize, n_cells: usize) -> Result<()> {
    let points: Vec<_> = fields.iter().filter(|f| matches!(f, VtkField::PointScalar(..))).collect();
    let cells: Vec<_> = fields.iter().filter(|f| !matches!(f, VtkField::PointScalar(..))).collect();
    if !points.is_empty() {
        writeln!(out, "POINT_DATA {n_points}")?;
        for f in points {
            write_field(out, f)?;
        }
    }
    if !cells.is_empty() {
        writeln!(out, "CELL_DATA {n_cells}")?;
        for f in cells {
            write_field(out, f)?;
        }
    }
    Ok(())
}

fn write_field(out: &mut impl Write, field: &VtkField) -> Result<()> {
    match field {
        VtkField::PointScalar(name, v) | VtkField::CellScalar(name, v) => {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for x in v.iter() {
                writeln!(out, "{}", fmt(*x))?;
            }
        }
        VtkField::CellVector(name, v) => {
            writeln!(out, "VECTORS {name} double")?;
            for x in v.iter() {
                writeln!(out, "{} {} 0", fmt(x[0]), fmt(x[1]))?;
            }
        }
    }
    Ok(())
}

/// Writes the faces as line cells (type 3) with one value per face.
pub fn write_face_vtk(out: &mut impl Write, mesh: &Mesh, name: &str, values: &[f64]) -> Result<()> {
    let nf = mesh.n_faces();
    if values.len() != nf {
        return Err(FemError::Dimension(format!("{} face values for {nf} faces", values.len())));
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{name} per face")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_nodes())?;
    for p in mesh.nodes() {
        writeln!(out, "{} {} 0", fmt(p[0]), fmt(p[1]))?;
    }
    writeln!(out, "CELLS {nf} {}", 3 * nf)?;
    for f in 0..nf {
        let [a, b] = mesh.face_nodes(f);
        writeln!(out, "2 {a} {b}")?;
    }
    writeln!(out, "CELL_TYPES {nf}")?;
    for _ in 0..nf {
        writeln!(out, "3")?;
    }
    writeln!(out, "CELL_DATA {nf}")?;
    write_field(out, &VtkField::CellScalar(name, values))
}

/// [`write_vtk`] into a file.
pub fn save_vtk(path: impl AsRef<Path>, mesh: &Mesh, title: &str, fields: &[VtkField]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_vtk(&mut out, mesh, title, fields)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    #[test]
    fn layout() {
        let mesh = unit_square_mesh(1).unwrap();
        let mut buf = Vec::new();
        let u = vec![0.0, 1.0, 2.0, 3.0];
        write_vtk(&mut buf, &mesh, "test", &[VtkField::PointScalar("u", &u), VtkField::CellScalar("k", &[1.0, 2.0])])
            .unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("CELLS 2 8"));
        assert!(s.contains("CELL_TYPES 2\n5\n5\n"));
        assert!(s.contains("POINT_DATA 4\nSCALARS u double 1"));
        assert!(s.contains("CELL_DATA 2\nSCALARS k double 1"));
    }

    #[test]
    fn length_mismatch_rejected() {
        let mesh = unit_square_mesh(1).unwrap();
        let err = write_vtk(&mut Vec::new(), &mesh, "t", &[VtkField::CellScalar("k", &[1.0])]);
        assert!(matches!(err, Err(FemError::Dimension(_))));
    }
}
