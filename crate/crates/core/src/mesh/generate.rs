use super::{assign_boundary_markers, Mesh2D, SideMarkers};
use crate::error::{Result, VemError};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rectangle {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rectangle {
    pub fn unit() -> Self {
        Self {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructuredKind {
    /// `n x n` rectangles.
    Quads,
    /// Each rectangle split along its rising diagonal.
    Triangles,
    /// Rectangles where every other cell's right edge carries a midpoint
    /// hanging node, giving pentagons with collinear vertices on both sides.
    HangingQuads,
}

/// Structured mesh of `domain` with `n` subdivisions per direction.
/// All markers are 0; see [`unit_square`] for a marked mesh.
pub fn generate_structured(domain: &Rectangle, kind: StructuredKind, n: usize) -> Result<Mesh2D> {
    if n == 0 {
        return Err(VemError::Mesh("at least one subdivision is required".into()));
    }
    if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
        return Err(VemError::Mesh(format!("degenerate domain {domain:?}")));
    }
    let xs: Vec<f64> = (0..=n)
        .map(|i| domain.x0 + (domain.x1 - domain.x0) * i as f64 / n as f64)
        .collect();
    let ys: Vec<f64> = (0..=n)
        .map(|j| domain.y0 + (domain.y1 - domain.y0) * j as f64 / n as f64)
        .collect();
    // Exact endpoints regardless of rounding.
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for &y in &ys {
        for &x in &xs {
            vertices.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;

    let mut cells = Vec::new();
    match kind {
        StructuredKind::Quads => {
            for j in 0..n {
                for i in 0..n {
                    cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
        }
        StructuredKind::Triangles => {
            for j in 0..n {
                for i in 0..n {
                    cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                    cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
        }
        StructuredKind::HangingQuads => {
            // hanging[j * n + i] = midpoint vertex on the right edge of cell (i, j)
            let mut hanging = vec![None; n * n];
            for j in 0..n {
                for i in 0..n.saturating_sub(1) {
                    if (i + j) % 2 == 0 {
                        vertices.push([xs[i + 1], 0.5 * (ys[j] + ys[j + 1])]);
                        hanging[j * n + i] = Some(vertices.len() - 1);
                    }
                }
            }
            for j in 0..n {
                for i in 0..n {
                    let mut c = vec![id(i, j), id(i + 1, j)];
                    if let Some(m) = hanging[j * n + i] {
                        c.push(m);
                    }
                    c.push(id(i + 1, j + 1));
                    c.push(id(i, j + 1));
                    if i > 0 {
                        if let Some(m) = hanging[j * n + i - 1] {
                            c.push(m);
                        }
                    }
                    cells.push(c);
                }
            }
        }
    }
    Mesh2D::from_cells(vertices, cells)
}

/// Structured mesh of the unit square with sides marked
/// bottom 1, right 2, top 3, left 4.
pub fn unit_square(kind: StructuredKind, n: usize) -> Result<Mesh2D> {
    let domain = Rectangle::unit();
    let mesh = generate_structured(&domain, kind, n)?;
    assign_boundary_markers(&mesh, &domain, &SideMarkers::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_area(m: &Mesh2D) -> f64 {
        (0..m.num_cells()).map(|c| m.polygon(c).unwrap().area()).sum()
    }

    #[test]
    fn quad_counts() {
        let m = generate_structured(&Rectangle::unit(), StructuredKind::Quads, 2).unwrap();
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_cells()), (9, 12, 4));
    }

    #[test]
    fn triangle_counts() {
        let m = generate_structured(&Rectangle::unit(), StructuredKind::Triangles, 2).unwrap();
        assert_eq!(m.num_cells(), 8);
    }

    #[test]
    fn hanging_pentagon() {
        let m = generate_structured(&Rectangle::unit(), StructuredKind::HangingQuads, 2).unwrap();
        let found = (0..m.num_cells()).any(|c| {
            let p = m.polygon(c).unwrap();
            p.num_vertices() == 5 && (p.area() - 0.25).abs() < 1e-15
        });
        assert!(found);
    }

    #[test]
    fn meshes_tile_the_domain() {
        let d = Rectangle {
            x0: -1.0,
            x1: 2.0,
            y0: 0.5,
            y1: 1.5,
        };
        for kind in [
            StructuredKind::Quads,
            StructuredKind::Triangles,
            StructuredKind::HangingQuads,
        ] {
            for n in [1, 3, 6] {
                let m = generate_structured(&d, kind, n).unwrap();
                assert!((total_area(&m) - d.area()).abs() < 1e-12 * d.area());
            }
        }
    }

    #[test]
    fn interior_edges_have_two_opposite_cells() {
        let m = generate_structured(&Rectangle::unit(), StructuredKind::HangingQuads, 5).unwrap();
        let adj = m.edge_cells();
        for (e, cells) in adj.iter().enumerate() {
            assert!(cells.len() == 1 || cells.len() == 2);
            if cells.len() == 2 {
                let dir = |c: usize| {
                    let cell = &m.cells()[c];
                    let l = cell.edges.iter().position(|&x| x == e).unwrap();
                    cell.vertices[l]
                };
                assert_ne!(dir(cells[0]), dir(cells[1]));
            }
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(generate_structured(&Rectangle::unit(), StructuredKind::Quads, 0).is_err());
        let flat = Rectangle {
            x0: 0.0,
            x1: 0.0,
            y0: 0.0,
            y1: 1.0,
        };
        assert!(generate_structured(&flat, StructuredKind::Quads, 2).is_err());
    }
}
