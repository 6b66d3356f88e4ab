//! Line-oriented mesh text format:
//!
//! ```text
//! # comment
//! nodes N
//! x y            (N lines)
//! triangles M
//! i j k          (M lines, 0-based)
//! boundary B
//! i j tag        (B lines)
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Mesh, Point};
use crate::error::{FemError, Result};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = fs::read_to_string(path)?;
    parse_mesh(&text)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    write_mesh(mesh, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn write_mesh(mesh: &Mesh, out: &mut impl Write) -> Result<()> {
    writeln!(out, "nodes {}", mesh.n_nodes())?;
    for p in mesh.nodes() {
        writeln!(out, "{} {}", p[0], p[1])?;
    }
    writeln!(out, "triangles {}", mesh.n_triangles())?;
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "boundary {}", mesh.boundary_faces().len())?;
    for f in mesh.boundary_faces() {
        writeln!(out, "{} {} {}", f.nodes[0], f.nodes[1], f.tag)?;
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Nodes,
    Triangles,
    Boundary,
}

fn parse_err(line: usize, message: impl Into<String>) -> FemError {
    FemError::Parse { line, message: message.into() }
}

fn fields<T: std::str::FromStr>(line_no: usize, text: &str, count: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != count {
        return Err(parse_err(line_no, format!("expected {count} values, found {}", parts.len())));
    }
    parts.iter().map(|s| s.parse::<T>().map_err(|_| parse_err(line_no, format!("cannot parse '{s}'")))).collect()
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut nodes: Vec<Point> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut boundary: Vec<(usize, usize, u32)> = Vec::new();
    let mut expected = [None::<usize>; 3];
    let mut section = Section::None;
    let mut remaining = 0usize;
    let mut tri_lines = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if remaining == 0 {
            let mut parts = line.split_whitespace();
            let keyword = parts.next().unwrap_or("");
            let count: usize = parts
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| parse_err(line_no, format!("expected '<section> <count>', got '{line}'")))?;
            if parts.next().is_some() {
                return Err(parse_err(line_no, "trailing tokens after section header"));
            }
            let slot = match keyword {
                "nodes" => {
                    section = Section::Nodes;
                    0
                }
                "triangles" => {
                    section = Section::Triangles;
                    1
                }
                "boundary" => {
                    section = Section::Boundary;
                    2
                }
                other => return Err(parse_err(line_no, format!("unknown section '{other}'"))),
            };
            if expected[slot].is_some() {
                return Err(parse_err(line_no, format!("duplicate section '{keyword}'")));
            }
            expected[slot] = Some(count);
            remaining = count;
            continue;
        }
        match section {
            Section::Nodes => {
                let v: Vec<f64> = fields(line_no, line, 2)?;
                if !v.iter().all(|x| x.is_finite()) {
                    return Err(parse_err(line_no, "non-finite coordinate"));
                }
                nodes.push([v[0], v[1]]);
            }
            Section::Triangles => {
                let v: Vec<usize> = fields(line_no, line, 3)?;
                triangles.push([v[0], v[1], v[2]]);
                tri_lines.push(line_no);
            }
            Section::Boundary => {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(parse_err(line_no, format!("expected 3 values, found {}", parts.len())));
                }
                let a: usize = parts[0].parse().map_err(|_| parse_err(line_no, "bad node index"))?;
                let b: usize = parts[1].parse().map_err(|_| parse_err(line_no, "bad node index"))?;
                let tag: u32 = parts[2].parse().map_err(|_| parse_err(line_no, "bad boundary tag"))?;
                boundary.push((a, b, tag));
            }
            Section::None => unreachable!(),
        }
        remaining -= 1;
    }
    if remaining != 0 {
        return Err(parse_err(text.lines().count(), format!("file ended with {remaining} entries missing")));
    }
    if expected[0].is_none() || expected[1].is_none() {
        return Err(parse_err(0, "missing 'nodes' or 'triangles' section"));
    }
    let n = nodes.len();
    for (t, tri) in triangles.iter().enumerate() {
        if let Some(&bad) = tri.iter().find(|&&v| v >= n) {
            return Err(parse_err(tri_lines[t], format!("node index {bad} out of range ({n} nodes)")));
        }
    }
    for &(a, b, _) in &boundary {
        if a >= n || b >= n {
            return Err(parse_err(0, format!("boundary edge ({a}, {b}) references a missing node")));
        }
    }
    Mesh::new(nodes, triangles, &boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    #[test]
    fn round_trip_identity() {
        let m = unit_square_mesh(2).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = parse_mesh(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.nodes(), m.nodes());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_faces(), m.boundary_faces());
    }

    #[test]
    fn out_of_range_index_reports_line() {
        let text = "# tiny\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 3\n";
        match parse_mesh(text) {
            Err(FemError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_number_reports_line() {
        let text = "nodes 2\n0 0\n1 x\n";
        match parse_mesh(text) {
            Err(FemError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn t_junction_file_is_rejected() {
        let text = "nodes 5\n0 0\n2 0\n1 1\n1 -1\n1 0\ntriangles 3\n0 1 2\n0 3 4\n4 3 1\n";
        assert!(matches!(parse_mesh(text), Err(FemError::Conformity(_))));
    }

    #[test]
    fn comments_and_default_tags() {
        let text = "nodes 3 # three\n0 0\n1 0\n0 1\n\ntriangles 1\n0 1 2\nboundary 1\n0 1 7\n";
        let m = parse_mesh(text).unwrap();
        assert_eq!(m.boundary_tags(), vec![1, 7]);
    }
}
