//! Global DOFs, assembly and linear solves.
//!
//! Element contributions are computed in parallel and scattered serially in
//! cell order. Strong DOFs are eliminated by lifting their values into the
//! right-hand side.

pub mod darcy;
pub mod diffusion;
pub mod dofs;
pub mod elasticity;
pub mod stokes;
pub mod system;

use nalgebra::{DMatrix, DVector};

pub use darcy::{assemble_darcy, DarcyDiscretization, DarcyProblem};
pub use diffusion::{assemble_diffusion, DiffusionDiscretization, DiffusionProblem};
pub use dofs::{
    BcKind, BoundaryCondition, BoundaryConditionSpec, DofKind, DofTable, EdgeOrientation, LocalDof,
    Slot,
};
pub use elasticity::{assemble_elasticity, ElasticityDiscretization, ElasticityProblem};
pub use stokes::{assemble_stokes, StokesDiscretization, StokesProblem};
pub use system::{residual_check, CsrMatrix, DirectSolver, LinearSystem, SparseSolver};

use crate::vem::Stabilization;

/// Settings shared by the assemblers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyOptions {
    pub order: usize,
    pub stabilization: Stabilization,
    /// Interior quadrature exactness; `None` selects `2k + 2`.
    pub quadrature_order: Option<usize>,
}

impl AssemblyOptions {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            stabilization: Stabilization::default(),
            quadrature_order: None,
        }
    }

    pub fn with_stabilization(mut self, stabilization: Stabilization) -> Self {
        self.stabilization = stabilization;
        self
    }

    pub(crate) fn quadrature(&self) -> usize {
        self.quadrature_order.unwrap_or(2 * self.order + 2)
    }
}

/// Local matrix and load with the global targets of its rows.
#[derive(Clone, Debug)]
pub struct LocalContribution {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub map: Vec<LocalDof>,
}

/// Adds a local contribution, lifting strong DOFs into the right-hand side.
pub fn scatter(system: &mut LinearSystem, strong: &[f64], c: &LocalContribution) {
    for (i, di) in c.map.iter().enumerate() {
        let Slot::Unknown(gi) = di.slot else { continue };
        system.add_rhs(gi, di.sign * c.rhs[i]);
        for (j, dj) in c.map.iter().enumerate() {
            let a = di.sign * dj.sign * c.matrix[(i, j)];
            match dj.slot {
                Slot::Unknown(gj) => system.add(gi, gj, a),
                Slot::Strong(s) => system.add_rhs(gi, -a * strong[s]),
            }
        }
    }
}

/// Local DOF values from a global solution and the strong values.
pub fn gather(map: &[LocalDof], solution: &[f64], strong: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        map.len(),
        map.iter().map(|d| {
            d.sign
                * match d.slot {
                    Slot::Unknown(i) => solution[i],
                    Slot::Strong(s) => strong[s],
                }
        }),
    )
}

/// Records strong values `value = sign * local` for every strong local DOF.
pub(crate) fn record_strong(strong: &mut [f64], map: &[LocalDof], local: &[Option<f64>]) {
    for (d, v) in map.iter().zip(local) {
        if let (Slot::Strong(s), Some(v)) = (d.slot, v) {
            strong[s] = d.sign * v;
        }
    }
}

/// Maps local DOFs of a second copy of a field into the global numbering.
pub(crate) fn offset_map(map: &[LocalDof], unknowns: usize, strong: usize) -> Vec<LocalDof> {
    map.iter()
        .map(|d| LocalDof {
            slot: match d.slot {
                Slot::Unknown(i) => Slot::Unknown(i + unknowns),
                Slot::Strong(s) => Slot::Strong(s + strong),
            },
            sign: d.sign,
        })
        .collect()
}

/// `sum_q w_q a_q^T c_q b_q` over the rows of value matrices.
pub(crate) fn weighted_gram(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |q, j| w[q] * a[(q, j)]);
    scaled.transpose() * b
}
