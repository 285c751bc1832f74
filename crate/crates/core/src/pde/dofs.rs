//! Global DOF numbering with boundary-condition classification.
//!
//! Every mesh entity (vertex, edge, cell) carries a fixed number of DOFs.
//! Entities with marker 0 carry no condition; positive markers are looked up
//! in a [`BoundaryConditionSpec`] and classified as strong (eliminated from
//! the unknowns) or weak (unknowns with natural boundary data). Unknowns and
//! strong DOFs are numbered separately, each gapless, in the order
//! vertices, edges, cells.

use std::collections::BTreeMap;

use crate::error::{Result, VemError};
use crate::mesh::Mesh2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    /// Essential condition imposed on the DOFs.
    Strong,
    /// Natural condition entering through boundary integrals.
    Weak,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryCondition {
    pub kind: BcKind,
    /// Marker passed to boundary data functions.
    pub problem_marker: u32,
}

/// Mesh marker to boundary condition map.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundaryConditionSpec {
    conditions: BTreeMap<u32, BoundaryCondition>,
}

impl BoundaryConditionSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Maps `mesh_marker` to `kind`, reusing the marker as problem marker.
    pub fn with(self, mesh_marker: u32, kind: BcKind) -> Self {
        self.with_problem_marker(mesh_marker, kind, mesh_marker)
    }

    pub fn with_problem_marker(mut self, mesh_marker: u32, kind: BcKind, problem_marker: u32) -> Self {
        self.conditions.insert(
            mesh_marker,
            BoundaryCondition {
                kind,
                problem_marker,
            },
        );
        self
    }

    /// Same kind on every listed marker.
    pub fn uniform(kind: BcKind, markers: impl IntoIterator<Item = u32>) -> Self {
        markers.into_iter().fold(Self::new(), |s, m| s.with(m, kind))
    }

    pub fn get(&self, mesh_marker: u32) -> Option<&BoundaryCondition> {
        self.conditions.get(&mesh_marker)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofKind {
    /// No condition (interior entity).
    Internal,
    Strong,
    Weak,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EntityRecord {
    pub kind: DofKind,
    pub problem_marker: u32,
    /// First index in the unknown numbering (or strong numbering if strong).
    pub first: usize,
}

/// How edge DOFs transform when an element traverses an edge against its
/// canonical direction (lower global vertex index first).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeOrientation {
    /// DOFs per edge node; node order is reversed, component order kept.
    pub components_per_node: usize,
    /// Multiply by -1 on reversal (normal components).
    pub flip_sign: bool,
}

impl Default for EdgeOrientation {
    fn default() -> Self {
        Self {
            components_per_node: 1,
            flip_sign: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Unknown(usize),
    Strong(usize),
}

/// Global target of one local DOF.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalDof {
    pub slot: Slot,
    pub sign: f64,
}

impl LocalDof {
    pub fn shifted(self, offset: usize) -> Self {
        match self.slot {
            Slot::Unknown(i) => Self {
                slot: Slot::Unknown(i + offset),
                sign: self.sign,
            },
            Slot::Strong(_) => self,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DofTable {
    /// DOFs per vertex, edge and cell.
    counts: [usize; 3],
    orientation: EdgeOrientation,
    vertices: Vec<EntityRecord>,
    edges: Vec<EntityRecord>,
    cells: Vec<EntityRecord>,
    n_unknowns: usize,
    n_strong: usize,
}

impl DofTable {
    pub fn new(
        mesh: &Mesh2D,
        counts: [usize; 3],
        orientation: EdgeOrientation,
        bc: &BoundaryConditionSpec,
    ) -> Result<Self> {
        if orientation.components_per_node == 0 || !counts[1].is_multiple_of(orientation.components_per_node) {
            return Err(VemError::Dimension(format!(
                "edge DOF count {} is not a multiple of {} components",
                counts[1], orientation.components_per_node
            )));
        }
        let mut n_unknowns = 0;
        let mut n_strong = 0;
        let mut classify = |markers: &mut dyn Iterator<Item = u32>, count: usize| {
            markers
                .map(|m| {
                    let (kind, problem_marker) = if m == 0 {
                        (DofKind::Internal, 0)
                    } else {
                        let c = bc.get(m).ok_or(VemError::UnmappedMarker(m))?;
                        let kind = match c.kind {
                            BcKind::Strong => DofKind::Strong,
                            BcKind::Weak => DofKind::Weak,
                        };
                        (kind, c.problem_marker)
                    };
                    let counter = if kind == DofKind::Strong {
                        &mut n_strong
                    } else {
                        &mut n_unknowns
                    };
                    let first = *counter;
                    *counter += count;
                    Ok(EntityRecord {
                        kind,
                        problem_marker,
                        first,
                    })
                })
                .collect::<Result<Vec<_>>>()
        };
        let vertices = classify(&mut mesh.vertex_markers().iter().copied(), counts[0])?;
        let edges = classify(&mut mesh.edge_markers().iter().copied(), counts[1])?;
        let cells = classify(&mut mesh.cells().iter().map(|c| c.marker), counts[2])?;
        Ok(Self {
            counts,
            orientation,
            vertices,
            edges,
            cells,
            n_unknowns,
            n_strong,
        })
    }

    /// Number of unknowns.
    pub fn num_dofs(&self) -> usize {
        self.n_unknowns
    }

    pub fn num_strong(&self) -> usize {
        self.n_strong
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn vertex(&self, v: usize) -> &EntityRecord {
        &self.vertices[v]
    }

    pub fn edge(&self, e: usize) -> &EntityRecord {
        &self.edges[e]
    }

    pub fn cell(&self, c: usize) -> &EntityRecord {
        &self.cells[c]
    }

    fn slot(rec: &EntityRecord, offset: usize) -> Slot {
        if rec.kind == DofKind::Strong {
            Slot::Strong(rec.first + offset)
        } else {
            Slot::Unknown(rec.first + offset)
        }
    }

    /// Global targets of the local DOFs of `cell`: vertex DOFs by local
    /// vertex, edge DOFs by local edge (in the element's CCW direction),
    /// then cell DOFs.
    pub fn local_to_global(&self, mesh: &Mesh2D, cell: usize) -> Vec<LocalDof> {
        let c = &mesh.cells()[cell];
        let n = c.vertices.len();
        let [cv, ce, cc] = self.counts;
        let mut out = Vec::with_capacity(n * (cv + ce) + cc);
        for &v in &c.vertices {
            let rec = &self.vertices[v];
            for i in 0..cv {
                out.push(LocalDof {
                    slot: Self::slot(rec, i),
                    sign: 1.0,
                });
            }
        }
        let comps = self.orientation.components_per_node;
        let nodes = ce / comps;
        for (i, &e) in c.edges.iter().enumerate() {
            let rec = &self.edges[e];
            let forward = c.vertices[i] < c.vertices[(i + 1) % n];
            let sign = if !forward && self.orientation.flip_sign {
                -1.0
            } else {
                1.0
            };
            for j in 0..nodes {
                let node = if forward { j } else { nodes - 1 - j };
                for comp in 0..comps {
                    out.push(LocalDof {
                        slot: Self::slot(rec, node * comps + comp),
                        sign,
                    });
                }
            }
        }
        let rec = &self.cells[cell];
        for i in 0..cc {
            out.push(LocalDof {
                slot: Self::slot(rec, i),
                sign: 1.0,
            });
        }
        out
    }

    /// Kind of the local edge `i` of `cell`.
    pub fn local_edge_record(&self, mesh: &Mesh2D, cell: usize, i: usize) -> &EntityRecord {
        &self.edges[mesh.cells()[cell].edges[i]]
    }
}
