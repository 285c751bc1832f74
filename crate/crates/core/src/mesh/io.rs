//! Plain-text mesh format.
//!
//! ```text
//! nv ne nc
//! x y marker            (nv lines)
//! v0 v1 marker          (ne lines)
//! n v_1..v_n e_1..e_n marker   (nc lines)
//! ```
//!
//! `#` starts a comment. Coordinates are written with shortest round-trip
//! formatting, so write followed by read reproduces the mesh bit for bit.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{Cell, Mesh2D};
use crate::error::{Result, VemError};

pub fn write_mesh_to(mesh: &Mesh2D) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# polygonal mesh: vertices, edges, cells");
    let _ = writeln!(s, "{} {} {}", mesh.num_vertices(), mesh.num_edges(), mesh.num_cells());
    for (p, m) in mesh.vertices().iter().zip(mesh.vertex_markers()) {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], m);
    }
    for (e, m) in mesh.edges().iter().zip(mesh.edge_markers()) {
        let _ = writeln!(s, "{} {} {}", e[0], e[1], m);
    }
    for c in mesh.cells() {
        let _ = write!(s, "{}", c.vertices.len());
        for v in &c.vertices {
            let _ = write!(s, " {v}");
        }
        for e in &c.edges {
            let _ = write!(s, " {e}");
        }
        let _ = writeln!(s, " {}", c.marker);
    }
    s
}

pub fn write_mesh(mesh: &Mesh2D, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(write_mesh_to(mesh).as_bytes())?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh2D> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-empty line with comments stripped, as (1-based line, tokens).
    fn next_record(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let body = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok((i + 1, toks));
            }
        }
        Err(VemError::MeshFormat {
            line: 0,
            msg: format!("unexpected end of file while reading {what}"),
        })
    }
}

fn field<T: FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse().map_err(|_| VemError::MeshFormat {
        line,
        msg: format!("cannot parse {what} from '{tok}'"),
    })
}

fn expect_len(line: usize, toks: &[&str], n: usize, what: &str) -> Result<()> {
    if toks.len() != n {
        return Err(VemError::MeshFormat {
            line,
            msg: format!("{what} needs {n} fields, found {}", toks.len()),
        });
    }
    Ok(())
}

pub fn parse_mesh(text: &str) -> Result<Mesh2D> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (ln, head) = lines.next_record("header")?;
    expect_len(ln, &head, 3, "header")?;
    let nv: usize = field(ln, head[0], "vertex count")?;
    let ne: usize = field(ln, head[1], "edge count")?;
    let nc: usize = field(ln, head[2], "cell count")?;

    let mut vertices = Vec::with_capacity(nv);
    let mut vertex_markers = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = lines.next_record("vertices")?;
        expect_len(ln, &t, 3, "vertex")?;
        vertices.push([field(ln, t[0], "x")?, field(ln, t[1], "y")?]);
        vertex_markers.push(field(ln, t[2], "marker")?);
    }
    let mut edges = Vec::with_capacity(ne);
    let mut edge_markers = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, t) = lines.next_record("edges")?;
        expect_len(ln, &t, 3, "edge")?;
        edges.push([field(ln, t[0], "vertex index")?, field(ln, t[1], "vertex index")?]);
        edge_markers.push(field(ln, t[2], "marker")?);
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, t) = lines.next_record("cells")?;
        let n: usize = field(ln, t[0], "cell size")?;
        expect_len(ln, &t, 2 * n + 2, "cell")?;
        let vertices = t[1..=n]
            .iter()
            .map(|s| field(ln, s, "vertex index"))
            .collect::<Result<Vec<usize>>>()?;
        let edges = t[n + 1..=2 * n]
            .iter()
            .map(|s| field(ln, s, "edge index"))
            .collect::<Result<Vec<usize>>>()?;
        cells.push(Cell {
            vertices,
            edges,
            marker: field(ln, t[2 * n + 1], "marker")?,
        });
    }
    if let Ok((ln, _)) = lines.next_record("trailing data") {
        return Err(VemError::MeshFormat {
            line: ln,
            msg: "unexpected trailing data".into(),
        });
    }
    Mesh2D::new(vertices, vertex_markers, edges, edge_markers, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square, StructuredKind};

    #[test]
    fn round_trip_is_exact() {
        let m = unit_square(StructuredKind::HangingQuads, 3).unwrap();
        let back = parse_mesh(&write_mesh_to(&m)).unwrap();
        assert_eq!(m, back);
        for (a, b) in m.vertices().iter().zip(back.vertices()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
    }

    #[test]
    fn clockwise_cell_is_rejected() {
        let text = "4 4 1\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n0 1 1\n1 2 1\n2 3 1\n3 0 1\n4 0 3 2 1 3 2 1 0 0\n";
        assert!(matches!(parse_mesh(text), Err(VemError::Orientation(_))));
    }

    #[test]
    fn dangling_edge_is_rejected() {
        let text = "4 4 1\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n0 1 1\n1 2 1\n2 3 1\n3 0 1\n4 0 1 2 3 0 1 2 7 0\n";
        assert!(matches!(parse_mesh(text), Err(VemError::Mesh(_))));
    }

    #[test]
    fn malformed_line_reports_position() {
        let text = "# header\n4 4 1\n0 0 1\n1 zero 1\n";
        match parse_mesh(text) {
            Err(VemError::MeshFormat { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}
