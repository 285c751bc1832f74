//! Stokes problem `-nu lap u - grad p = f`, `div u = 0` with the
//! divergence-free spaces, full or reduced.
//!
//! Unknowns: velocity DOFs, discontinuous pressure coefficients, and one
//! multiplier enforcing a zero-mean pressure. The system is symmetric:
//! `[A B^T 0; B 0 c; 0 c^T 0]`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::dofs::{BoundaryConditionSpec, DofKind, DofTable, EdgeOrientation, LocalDof, Slot};
use super::{gather, record_strong, scatter, weighted_gram, AssemblyOptions, LinearSystem, LocalContribution};
use crate::error::Result;
use crate::mesh::Mesh2D;
use crate::polybasis::{n_perp, poly_dim};
use crate::vem::common::projected_dof_stabilization;
use crate::vem::pcc::d_recipe_weights;
use crate::vem::{DfLocalSpace, Stabilization};
use crate::Point;

pub struct StokesProblem<'a> {
    pub viscosity: &'a (dyn Fn(Point) -> f64 + Sync),
    pub source: &'a (dyn Fn(Point) -> [f64; 2] + Sync),
    /// Strong velocity data.
    pub dirichlet: &'a (dyn Fn(u32, Point) -> [f64; 2] + Sync),
    /// Weak boundary load `g` in `int g . v` on the outward normal `n`.
    pub traction: &'a (dyn Fn(u32, Point, [f64; 2]) -> [f64; 2] + Sync),
}

pub struct StokesDiscretization {
    pub reduced: bool,
    pub velocity_dofs: DofTable,
    pub pressure_offset: usize,
    /// Pressure coefficients per cell (`n_{k-1}`, or 1 when reduced).
    pub pressure_dim: usize,
    pub multiplier: usize,
    pub spaces: Vec<DfLocalSpace>,
    /// Targets of the kept local velocity DOFs.
    pub velocity_maps: Vec<Vec<LocalDof>>,
    pub strong_values: Vec<f64>,
    pub system: LinearSystem,
}

impl StokesDiscretization {
    /// Full local velocity DOF vector (dropped DOFs are zero).
    pub fn local_velocity(&self, cell: usize, solution: &[f64]) -> DVector<f64> {
        let kept = gather(&self.velocity_maps[cell], solution, &self.strong_values);
        let mut v = DVector::zeros(self.spaces[cell].ndof);
        v.rows_mut(0, kept.len()).copy_from(&kept);
        v
    }

    /// Pressure coefficients in the leading monomials of `P_{k-1}`.
    pub fn local_pressure(&self, cell: usize, solution: &[f64]) -> DVector<f64> {
        let s = self.pressure_offset + cell * self.pressure_dim;
        DVector::from_column_slice(&solution[s..s + self.pressure_dim])
    }
}

/// `int nu grad_proj u : grad_proj v + nu S`.
pub fn local_stokes_matrix(
    space: &DfLocalSpace,
    viscosity: &(dyn Fn(Point) -> f64 + Sync),
    recipe: Stabilization,
) -> Result<DMatrix<f64>> {
    let pts = &space.quadrature.points;
    let wn: Vec<f64> = pts
        .iter()
        .zip(&space.quadrature.weights)
        .map(|(&x, &w)| w * viscosity(x))
        .collect();
    let v = space.pressure_basis().vandermonde(pts)?;
    let mut a = DMatrix::zeros(space.ndof, space.ndof);
    for blocks in &space.pi0_km1_grad {
        for p in blocks {
            let g = &v * p;
            a += weighted_gram(&g, &g, &wn);
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    let s = match recipe {
        Stabilization::DofiDofi => space.stabilization() * viscosity(space.polygon.centroid()),
        Stabilization::DRecipe => {
            projected_dof_stabilization(&space.d, &space.pi_nabla, Some(&d_recipe_weights(&a)))
        }
    };
    Ok(a + s)
}

pub fn assemble_stokes(
    mesh: &Mesh2D,
    problem: &StokesProblem,
    bc: &BoundaryConditionSpec,
    options: &AssemblyOptions,
    reduced: bool,
) -> Result<StokesDiscretization> {
    let k = options.order;
    if k < 2 {
        return Err(crate::VemError::Order {
            space: "divergence-free",
            order: k,
            min: 2,
        });
    }
    let nkm1 = poly_dim(2, k as i64 - 1);
    let cell_dofs = n_perp(k as i64 - 2) + if reduced { 0 } else { nkm1 - 1 };
    let velocity_dofs = DofTable::new(
        mesh,
        [2, 2 * (k - 1), cell_dofs],
        EdgeOrientation {
            components_per_node: 2,
            flip_sign: false,
        },
        bc,
    )?;
    let nu = velocity_dofs.num_dofs();
    let np = if reduced { 1 } else { nkm1 };
    let multiplier = nu + np * mesh.num_cells();
    type Element = (DfLocalSpace, LocalContribution, Vec<Option<f64>>, Vec<f64>);
    let elements: Vec<Element> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let polygon = mesh.polygon(c)?;
            let space = DfLocalSpace::with_quadrature(&polygon, k, options.quadrature())?;
            let nv = space.num_vertices();
            let nk = if reduced { space.div_offset() } else { space.ndof };
            let a = local_stokes_matrix(&space, problem.viscosity, options.stabilization)?;
            let pressure = space.basis.with_order(if reduced { 0 } else { k - 1 });
            let b = space.divergence_matrix(&pressure)?;
            let mut matrix = DMatrix::zeros(nk + np, nk + np);
            matrix.view_mut((0, 0), (nk, nk)).copy_from(&a.view((0, 0), (nk, nk)));
            matrix.view_mut((nk, 0), (np, nk)).copy_from(&b.columns(0, nk));
            matrix.view_mut((0, nk), (nk, np)).copy_from(&b.columns(0, nk).transpose());

            let [vx, vy] = space.basis_values_at(&space.quadrature.points)?;
            let mut rhs = DVector::zeros(nk + np);
            for (q, (&x, &w)) in space.quadrature.points.iter().zip(&space.quadrature.weights).enumerate() {
                let f = (problem.source)(x);
                for j in 0..nk {
                    rhs[j] += w * (f[0] * vx[(q, j)] + f[1] * vy[(q, j)]);
                }
            }
            let node_dof = |e: usize, j: usize, comp: usize| -> usize {
                if j == 0 {
                    2 * e + comp
                } else if j == k {
                    2 * ((e + 1) % nv) + comp
                } else {
                    2 * nv + 2 * (e * (k - 1) + j - 1) + comp
                }
            };
            let mut strong = vec![None; nk + np];
            for i in 0..nv {
                let rec = velocity_dofs.vertex(mesh.cells()[c].vertices[i]);
                if rec.kind == DofKind::Strong {
                    let g = (problem.dirichlet)(rec.problem_marker, polygon.vertices()[i]);
                    strong[2 * i] = Some(g[0]);
                    strong[2 * i + 1] = Some(g[1]);
                }
            }
            for e in 0..nv {
                let rec = velocity_dofs.local_edge_record(mesh, c, e);
                let tr = &space.edges[e];
                match rec.kind {
                    DofKind::Strong => {
                        for (j, &x) in tr.nodes.iter().enumerate() {
                            let g = (problem.dirichlet)(rec.problem_marker, x);
                            strong[node_dof(e, j + 1, 0)] = Some(g[0]);
                            strong[node_dof(e, j + 1, 1)] = Some(g[1]);
                        }
                    }
                    DofKind::Weak => {
                        for (q, (&x, &w)) in tr.points.iter().zip(&tr.weights).enumerate() {
                            let g = (problem.traction)(rec.problem_marker, x, tr.normal);
                            for j in 0..=k {
                                let l = w * tr.lagrange[(q, j)];
                                rhs[node_dof(e, j, 0)] += l * g[0];
                                rhs[node_dof(e, j, 1)] += l * g[1];
                            }
                        }
                    }
                    DofKind::Internal => {}
                }
            }
            let mut map = velocity_dofs.local_to_global(mesh, c);
            debug_assert_eq!(map.len(), nk);
            map.extend((0..np).map(|i| LocalDof {
                slot: Slot::Unknown(nu + c * np + i),
                sign: 1.0,
            }));
            let means: Vec<f64> = (0..np).map(|i| space.mass[(0, i)]).collect();
            Ok((space, LocalContribution { matrix, rhs, map }, strong, means))
        })
        .collect::<Result<_>>()?;

    let mut strong_values = vec![0.0; velocity_dofs.num_strong()];
    for (_, c, s, _) in &elements {
        record_strong(&mut strong_values, &c.map, s);
    }
    let mut system = LinearSystem::new(multiplier + 1);
    for (cell, (_, c, _, means)) in elements.iter().enumerate() {
        scatter(&mut system, &strong_values, c);
        for (i, &m) in means.iter().enumerate() {
            let p = nu + cell * np + i;
            system.add(multiplier, p, m);
            system.add(p, multiplier, m);
        }
    }
    let (spaces, velocity_maps) = elements
        .into_iter()
        .map(|(s, mut c, _, _)| {
            c.map.truncate(c.map.len() - np);
            (s, c.map)
        })
        .unzip();
    Ok(StokesDiscretization {
        reduced,
        velocity_dofs,
        pressure_offset: nu,
        pressure_dim: np,
        multiplier,
        spaces,
        velocity_maps,
        strong_values,
        system,
    })
}
