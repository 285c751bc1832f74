//! Primal diffusion problem `-div(D grad u) = f`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::dofs::{BoundaryConditionSpec, DofKind, DofTable, EdgeOrientation, LocalDof};
use super::{gather, record_strong, scatter, AssemblyOptions, LinearSystem, LocalContribution};
use crate::error::Result;
use crate::mesh::Mesh2D;
use crate::vem::{PccLocalSpace, PccReferenceElement, Projection, Stabilization};
use crate::Point;

/// Coefficients and boundary data; closures receive the problem marker of
/// the boundary entity.
pub struct DiffusionProblem<'a> {
    pub diffusion: &'a (dyn Fn(Point) -> [[f64; 2]; 2] + Sync),
    pub source: &'a (dyn Fn(Point) -> f64 + Sync),
    /// Strong data `u = g`.
    pub dirichlet: &'a (dyn Fn(u32, Point) -> f64 + Sync),
    /// Weak data `D grad u . n = g` on the outward normal `n`.
    pub neumann: &'a (dyn Fn(u32, Point, [f64; 2]) -> f64 + Sync),
}

pub struct DiffusionDiscretization {
    pub dofs: DofTable,
    pub spaces: Vec<PccLocalSpace>,
    pub maps: Vec<Vec<LocalDof>>,
    pub strong_values: Vec<f64>,
    pub system: LinearSystem,
}

impl DiffusionDiscretization {
    /// Local DOF vector of `cell` for a solution of the system.
    pub fn local_dofs(&self, cell: usize, solution: &[f64]) -> DVector<f64> {
        gather(&self.maps[cell], solution, &self.strong_values)
    }
}

/// Local diffusion matrix `int D grad_proj . grad_proj + C_s S`.
pub fn local_diffusion_matrix(
    space: &PccLocalSpace,
    diffusion: &(dyn Fn(Point) -> [[f64; 2]; 2] + Sync),
    recipe: Stabilization,
) -> Result<DMatrix<f64>> {
    let [vx, vy] = space.basis_function_derivative_values()?;
    let w = &space.quadrature.weights;
    let mut k = DMatrix::zeros(space.ndof, space.ndof);
    for (q, &x) in space.quadrature.points.iter().enumerate() {
        let d = diffusion(x);
        let gx = vx.row(q);
        let gy = vy.row(q);
        let fx = gx * d[0][0] + gy * d[0][1];
        let fy = gx * d[1][0] + gy * d[1][1];
        k += (gx.transpose() * fx + gy.transpose() * fy) * w[q];
    }
    let k = (&k + k.transpose()) * 0.5;
    let s = match recipe {
        Stabilization::DofiDofi => {
            space.stabilization(recipe) * PccLocalSpace::diffusion_scale(diffusion(space.polygon.centroid()))
        }
        Stabilization::DRecipe => space.d_recipe_stabilization(&k),
    };
    Ok(k + s)
}

pub fn assemble_diffusion(
    mesh: &Mesh2D,
    problem: &DiffusionProblem,
    bc: &BoundaryConditionSpec,
    options: &AssemblyOptions,
) -> Result<DiffusionDiscretization> {
    let k = options.order;
    let reference = PccReferenceElement::new(k)?;
    let dofs = DofTable::new(
        mesh,
        [
            reference.dofs_per_vertex(),
            reference.dofs_per_edge(),
            reference.dofs_per_cell(),
        ],
        EdgeOrientation::default(),
        bc,
    )?;
    let elements: Vec<(PccLocalSpace, LocalContribution, Vec<Option<f64>>)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let polygon = mesh.polygon(c)?;
            let space = PccLocalSpace::with_quadrature(&polygon, k, options.quadrature())?;
            let matrix = local_diffusion_matrix(&space, problem.diffusion, options.stabilization)?;
            let phi = space.basis_function_values(Projection::Pi0km1)?;
            let f: Vec<f64> = space
                .quadrature
                .points
                .iter()
                .zip(&space.quadrature.weights)
                .map(|(&x, &w)| w * (problem.source)(x))
                .collect();
            let mut rhs = phi.transpose() * DVector::from_vec(f);
            let map = dofs.local_to_global(mesh, c);
            let nv = space.num_vertices();
            let mut strong = vec![None; space.ndof];
            for i in 0..nv {
                let rec = dofs.vertex(mesh.cells()[c].vertices[i]);
                if rec.kind == DofKind::Strong {
                    strong[i] = Some((problem.dirichlet)(rec.problem_marker, polygon.vertices()[i]));
                }
            }
            for e in 0..nv {
                let rec = dofs.local_edge_record(mesh, c, e);
                let tr = &space.edges[e];
                match rec.kind {
                    DofKind::Strong => {
                        for (j, &x) in tr.nodes.iter().enumerate() {
                            strong[space.edge_node_dof(e, j + 1)] =
                                Some((problem.dirichlet)(rec.problem_marker, x));
                        }
                    }
                    DofKind::Weak => {
                        for (q, (&x, &w)) in tr.points.iter().zip(&tr.weights).enumerate() {
                            let g = w * (problem.neumann)(rec.problem_marker, x, tr.normal);
                            for j in 0..=k {
                                rhs[space.edge_node_dof(e, j)] += g * tr.lagrange[(q, j)];
                            }
                        }
                    }
                    DofKind::Internal => {}
                }
            }
            Ok((space, LocalContribution { matrix, rhs, map }, strong))
        })
        .collect::<Result<_>>()?;

    let mut strong_values = vec![0.0; dofs.num_strong()];
    for (_, c, s) in &elements {
        record_strong(&mut strong_values, &c.map, s);
    }
    let mut system = LinearSystem::new(dofs.num_dofs());
    for (_, c, _) in &elements {
        scatter(&mut system, &strong_values, c);
    }
    let (spaces, maps) = elements.into_iter().map(|(s, c, _)| (s, c.map)).unzip();
    Ok(DiffusionDiscretization {
        dofs,
        spaces,
        maps,
        strong_values,
        system,
    })
}
