//! Mixed Darcy problem `K u = -grad p`, `div u = f`.
//!
//! Unknowns: velocity DOFs, then discontinuous pressure coefficients
//! (`n_k` per cell). Pressure boundary data is natural (weak markers);
//! normal-flux data is essential (strong markers).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::dofs::{BoundaryConditionSpec, DofKind, DofTable, EdgeOrientation, LocalDof, Slot};
use super::{
    gather, record_strong, scatter, weighted_gram, AssemblyOptions, LinearSystem,
    LocalContribution,
};
use crate::error::{Result, VemError};
use crate::mesh::Mesh2D;
use crate::polybasis::{n_nabla, n_perp, poly_dim};
use crate::vem::{MccLocalSpace, PccLocalSpace, Stabilization};
use crate::Point;

pub struct DarcyProblem<'a> {
    /// Tensor `K` in `K u = -grad p`.
    pub k_tensor: &'a (dyn Fn(Point) -> [[f64; 2]; 2] + Sync),
    pub source: &'a (dyn Fn(Point) -> f64 + Sync),
    /// Weak pressure data on the boundary.
    pub pressure: &'a (dyn Fn(u32, Point) -> f64 + Sync),
    /// Strong velocity data; its normal component is imposed.
    pub flux: &'a (dyn Fn(u32, Point) -> [f64; 2] + Sync),
}

pub struct DarcyDiscretization {
    pub velocity_dofs: DofTable,
    /// Index of the first pressure unknown.
    pub pressure_offset: usize,
    pub pressure_dim: usize,
    pub spaces: Vec<MccLocalSpace>,
    pub velocity_maps: Vec<Vec<LocalDof>>,
    pub strong_values: Vec<f64>,
    pub system: LinearSystem,
}

impl DarcyDiscretization {
    pub fn local_velocity(&self, cell: usize, solution: &[f64]) -> DVector<f64> {
        gather(&self.velocity_maps[cell], solution, &self.strong_values)
    }

    /// Monomial coefficients of the pressure on `cell`.
    pub fn local_pressure(&self, cell: usize, solution: &[f64]) -> DVector<f64> {
        let s = self.pressure_offset + cell * self.pressure_dim;
        DVector::from_column_slice(&solution[s..s + self.pressure_dim])
    }
}

/// Velocity matrix `int K Pi0 u . Pi0 v + C_s S`.
pub fn local_velocity_matrix(
    space: &MccLocalSpace,
    k_tensor: &(dyn Fn(Point) -> [[f64; 2]; 2] + Sync),
) -> Result<DMatrix<f64>> {
    let [vx, vy] = space.basis_values()?;
    let pts = &space.quadrature.points;
    let w = &space.quadrature.weights;
    let mut a = DMatrix::zeros(space.ndof, space.ndof);
    for (comp_i, vi) in [&vx, &vy].into_iter().enumerate() {
        for (comp_j, vj) in [&vx, &vy].into_iter().enumerate() {
            let wk: Vec<f64> = pts.iter().zip(w).map(|(&x, &w)| w * k_tensor(x)[comp_i][comp_j]).collect();
            a += weighted_gram(vi, vj, &wk);
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    let scale = PccLocalSpace::diffusion_scale(k_tensor(space.polygon.centroid()));
    Ok(a + space.stabilization() * scale)
}

pub fn assemble_darcy(
    mesh: &Mesh2D,
    problem: &DarcyProblem,
    bc: &BoundaryConditionSpec,
    options: &AssemblyOptions,
) -> Result<DarcyDiscretization> {
    if options.stabilization != Stabilization::DofiDofi {
        return Err(VemError::Unsupported(format!(
            "stabilization {} for the mixed space",
            options.stabilization
        )));
    }
    let k = options.order;
    let velocity_dofs = DofTable::new(
        mesh,
        [0, k + 1, n_nabla(k as i64 - 1) + n_perp(k as i64)],
        EdgeOrientation {
            components_per_node: 1,
            flip_sign: true,
        },
        bc,
    )?;
    let nu = velocity_dofs.num_dofs();
    let np = poly_dim(2, k as i64);
    let dim = nu + np * mesh.num_cells();
    let elements: Vec<(MccLocalSpace, LocalContribution, Vec<Option<f64>>)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let polygon = mesh.polygon(c)?;
            let space = MccLocalSpace::with_quadrature(&polygon, k, options.quadrature())?;
            let n = space.ndof;
            let a = local_velocity_matrix(&space, problem.k_tensor)?;
            let b = space.divergence_matrix();
            let mut matrix = DMatrix::zeros(n + np, n + np);
            matrix.view_mut((0, 0), (n, n)).copy_from(&a);
            matrix.view_mut((n, 0), (np, n)).copy_from(&(-&b));
            matrix.view_mut((0, n), (n, np)).copy_from(&(-b.transpose()));
            let mut rhs = DVector::zeros(n + np);
            for (&x, &w) in space.quadrature.points.iter().zip(&space.quadrature.weights) {
                let f = w * (problem.source)(x);
                for (beta, m) in space.basis.eval(x).into_iter().enumerate() {
                    rhs[n + beta] -= f * m;
                }
            }
            let mut map = velocity_dofs.local_to_global(mesh, c);
            map.extend((0..np).map(|i| LocalDof {
                slot: Slot::Unknown(nu + c * np + i),
                sign: 1.0,
            }));
            let mut strong = vec![None; n + np];
            for (e, edge) in space.edges.iter().enumerate() {
                let rec = velocity_dofs.local_edge_record(mesh, c, e);
                for (q, (&x, &w)) in edge.points.iter().zip(&edge.weights).enumerate() {
                    let i = e * (k + 1) + q;
                    match rec.kind {
                        DofKind::Strong => {
                            let u = (problem.flux)(rec.problem_marker, x);
                            strong[i] = Some(u[0] * edge.normal[0] + u[1] * edge.normal[1]);
                        }
                        // Gauss nodes carry the DOFs, so the trace basis is cardinal.
                        DofKind::Weak => rhs[i] -= w * (problem.pressure)(rec.problem_marker, x),
                        DofKind::Internal => {}
                    }
                }
            }
            Ok((space, LocalContribution { matrix, rhs, map }, strong))
        })
        .collect::<Result<_>>()?;

    let mut strong_values = vec![0.0; velocity_dofs.num_strong()];
    for (_, c, s) in &elements {
        record_strong(&mut strong_values, &c.map, s);
    }
    let mut system = LinearSystem::new(dim);
    for (_, c, _) in &elements {
        scatter(&mut system, &strong_values, c);
    }
    let (spaces, velocity_maps) = elements
        .into_iter()
        .map(|(s, mut c, _)| {
            c.map.truncate(s.ndof);
            (s, c.map)
        })
        .unzip();
    Ok(DarcyDiscretization {
        velocity_dofs,
        pressure_offset: nu,
        pressure_dim: np,
        spaces,
        velocity_maps,
        strong_values,
        system,
    })
}
