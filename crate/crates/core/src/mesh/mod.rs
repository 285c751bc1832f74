//! Polygonal meshes with vertex, edge and cell markers.
//!
//! Marker `0` labels cells carrying no condition; all 2D cells are marked
//! `0`. Boundary vertices and edges carry positive markers once
//! [`assign_boundary_markers`] has been applied.

mod generate;
mod io;

use std::collections::HashMap;

pub use generate::{generate_structured, unit_square, Rectangle, StructuredKind};
pub use io::{parse_mesh, read_mesh, write_mesh, write_mesh_to};

use crate::error::{Result, VemError};
use crate::geometry::Polygon2D;
use crate::Point;

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// Counterclockwise vertex indices.
    pub vertices: Vec<usize>,
    /// `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub edges: Vec<usize>,
    pub marker: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh2D {
    vertices: Vec<Point>,
    vertex_markers: Vec<u32>,
    edges: Vec<[usize; 2]>,
    edge_markers: Vec<u32>,
    cells: Vec<Cell>,
}

impl Mesh2D {
    /// Builds a mesh from explicit connectivity and validates it.
    pub fn new(
        vertices: Vec<Point>,
        vertex_markers: Vec<u32>,
        edges: Vec<[usize; 2]>,
        edge_markers: Vec<u32>,
        cells: Vec<Cell>,
    ) -> Result<Self> {
        let mesh = Self {
            vertices,
            vertex_markers,
            edges,
            edge_markers,
            cells,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Builds a mesh from CCW cell vertex lists; edges are created in order
    /// of first appearance and all markers are 0.
    pub fn from_cells(vertices: Vec<Point>, cell_vertices: Vec<Vec<usize>>) -> Result<Self> {
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut cells = Vec::with_capacity(cell_vertices.len());
        for verts in cell_vertices {
            let n = verts.len();
            let mut cell_edges = Vec::with_capacity(n);
            for i in 0..n {
                let (a, b) = (verts[i], verts[(i + 1) % n]);
                let key = (a.min(b), a.max(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push([a, b]);
                    edges.len() - 1
                });
                cell_edges.push(id);
            }
            cells.push(Cell {
                vertices: verts,
                edges: cell_edges,
                marker: 0,
            });
        }
        let nv = vertices.len();
        let ne = edges.len();
        Self::new(vertices, vec![0; nv], edges, vec![0; ne], cells)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.vertex_markers.len() != nv {
            return Err(VemError::Mesh("vertex marker count mismatch".into()));
        }
        if self.edge_markers.len() != self.edges.len() {
            return Err(VemError::Mesh("edge marker count mismatch".into()));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e[0] >= nv || e[1] >= nv {
                return Err(VemError::Mesh(format!("edge {i} references a missing vertex")));
            }
            if e[0] == e[1] {
                return Err(VemError::Mesh(format!("edge {i} is degenerate")));
            }
        }
        for (c, cell) in self.cells.iter().enumerate() {
            let n = cell.vertices.len();
            if n < 3 || cell.edges.len() != n {
                return Err(VemError::Mesh(format!("cell {c} has inconsistent sizes")));
            }
            if cell.marker != 0 {
                return Err(VemError::Mesh(format!("cell {c} must carry marker 0")));
            }
            for i in 0..n {
                let (a, b) = (cell.vertices[i], cell.vertices[(i + 1) % n]);
                if a >= nv || b >= nv {
                    return Err(VemError::Mesh(format!("cell {c} references a missing vertex")));
                }
                let eid = cell.edges[i];
                let e = self.edges.get(eid).ok_or_else(|| {
                    VemError::Mesh(format!("cell {c} references dangling edge {eid}"))
                })?;
                if !((e[0] == a && e[1] == b) || (e[0] == b && e[1] == a)) {
                    return Err(VemError::Mesh(format!(
                        "cell {c}: edge {eid} does not join vertices {a} and {b}"
                    )));
                }
            }
            self.polygon(c)?;
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex_markers(&self) -> &[u32] {
        &self.vertex_markers
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_markers(&self) -> &[u32] {
        &self.edge_markers
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn polygon(&self, cell: usize) -> Result<Polygon2D> {
        let pts = self.cells[cell]
            .vertices
            .iter()
            .map(|&v| self.vertices[v])
            .collect();
        Polygon2D::new(pts)
    }

    /// Mesh size: largest cell diameter.
    pub fn h(&self) -> f64 {
        (0..self.num_cells())
            .filter_map(|c| self.polygon(c).ok())
            .map(|p| p.diameter())
            .fold(0.0, f64::max)
    }

    /// Cells adjacent to each edge.
    pub fn edge_cells(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.edges.len()];
        for (c, cell) in self.cells.iter().enumerate() {
            for &e in &cell.edges {
                adj[e].push(c);
            }
        }
        adj
    }

    /// Edges with exactly one adjacent cell.
    pub fn boundary_edges(&self) -> Vec<usize> {
        self.edge_cells()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.len() == 1)
            .map(|(e, _)| e)
            .collect()
    }

    /// Same geometry and connectivity with a different cell order.
    pub fn permute_cells(&self, order: &[usize]) -> Result<Self> {
        let cells = order.iter().map(|&c| self.cells[c].clone()).collect();
        Self::new(
            self.vertices.clone(),
            self.vertex_markers.clone(),
            self.edges.clone(),
            self.edge_markers.clone(),
            cells,
        )
    }
}

/// Marks boundary edges with `rule(midpoint, outward normal)` and boundary
/// vertices with the smallest positive marker of their boundary edges.
/// Interior vertices and edges get marker 0.
pub fn assign_boundary_markers_with(
    mesh: &Mesh2D,
    rule: impl Fn(Point, [f64; 2]) -> Option<u32>,
) -> Result<Mesh2D> {
    let adj = mesh.edge_cells();
    let mut edge_markers = vec![0u32; mesh.num_edges()];
    let mut vertex_markers = vec![0u32; mesh.num_vertices()];
    for (e, cells) in adj.iter().enumerate() {
        if cells.len() != 1 {
            continue;
        }
        let [a, b] = mesh.edges[e];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        // Outward normal from the owning cell's orientation.
        let cell = &mesh.cells[cells[0]];
        let local = cell.edges.iter().position(|&x| x == e).expect("edge in cell");
        let n = cell.vertices.len();
        let (s, t) = (
            mesh.vertices[cell.vertices[local]],
            mesh.vertices[cell.vertices[(local + 1) % n]],
        );
        let len = ((t[0] - s[0]).powi(2) + (t[1] - s[1]).powi(2)).sqrt();
        let normal = [(t[1] - s[1]) / len, -(t[0] - s[0]) / len];
        let marker = rule(mid, normal)
            .filter(|&m| m > 0)
            .ok_or_else(|| VemError::Mesh(format!("boundary edge {e} left unmarked")))?;
        edge_markers[e] = marker;
        for v in [a, b] {
            vertex_markers[v] = if vertex_markers[v] == 0 {
                marker
            } else {
                vertex_markers[v].min(marker)
            };
        }
    }
    Mesh2D::new(
        mesh.vertices.clone(),
        vertex_markers,
        mesh.edges.clone(),
        edge_markers,
        mesh.cells.clone(),
    )
}

/// Side markers for an axis-aligned rectangular domain.
#[derive(Clone, Copy, Debug)]
pub struct SideMarkers {
    pub bottom: u32,
    pub right: u32,
    pub top: u32,
    pub left: u32,
}

impl Default for SideMarkers {
    fn default() -> Self {
        Self {
            bottom: 1,
            right: 2,
            top: 3,
            left: 4,
        }
    }
}

/// Marks the four sides of `domain` (corners take the smaller marker).
pub fn assign_boundary_markers(
    mesh: &Mesh2D,
    domain: &Rectangle,
    sides: &SideMarkers,
) -> Result<Mesh2D> {
    let tol = 1e-10 * (domain.x1 - domain.x0).max(domain.y1 - domain.y0);
    assign_boundary_markers_with(mesh, |p, _| {
        if (p[1] - domain.y0).abs() <= tol {
            Some(sides.bottom)
        } else if (p[0] - domain.x1).abs() <= tol {
            Some(sides.right)
        } else if (p[1] - domain.y1).abs() <= tol {
            Some(sides.top)
        } else if (p[0] - domain.x0).abs() <= tol {
            Some(sides.left)
        } else {
            None
        }
    })
}
