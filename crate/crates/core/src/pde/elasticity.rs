//! Linear elasticity `-div(2 mu eps(u) + lambda div(u) I) = f` with two
//! primal scalar spaces, one per displacement component.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::dofs::{BoundaryConditionSpec, DofKind, DofTable, EdgeOrientation, LocalDof};
use super::{
    gather, offset_map, record_strong, scatter, weighted_gram, AssemblyOptions, LinearSystem,
    LocalContribution,
};
use crate::error::Result;
use crate::mesh::Mesh2D;
use crate::vem::common::projected_dof_stabilization;
use crate::vem::pcc::d_recipe_weights;
use crate::vem::{PccLocalSpace, PccReferenceElement, Projection, Stabilization};
use crate::Point;

pub struct ElasticityProblem<'a> {
    pub lambda: &'a (dyn Fn(Point) -> f64 + Sync),
    pub mu: &'a (dyn Fn(Point) -> f64 + Sync),
    pub source: &'a (dyn Fn(Point) -> [f64; 2] + Sync),
    /// Strong displacement data.
    pub dirichlet: &'a (dyn Fn(u32, Point) -> [f64; 2] + Sync),
    /// Weak traction data `sigma n` on the outward normal `n`.
    pub traction: &'a (dyn Fn(u32, Point, [f64; 2]) -> [f64; 2] + Sync),
}

/// Unknowns: all x-components, then all y-components.
pub struct ElasticityDiscretization {
    /// Numbering of one component.
    pub dofs: DofTable,
    pub spaces: Vec<PccLocalSpace>,
    /// Local DOFs `[u_x, u_y]` of each cell.
    pub maps: Vec<Vec<LocalDof>>,
    pub strong_values: Vec<f64>,
    pub system: LinearSystem,
}

impl ElasticityDiscretization {
    /// Local component DOF vectors of `cell`.
    pub fn local_dofs(&self, cell: usize, solution: &[f64]) -> [DVector<f64>; 2] {
        let all = gather(&self.maps[cell], solution, &self.strong_values);
        let n = all.len() / 2;
        [all.rows(0, n).into_owned(), all.rows(n, n).into_owned()]
    }
}

/// Local matrix on `[u_x, u_y]` DOFs.
pub fn local_elasticity_matrix(
    space: &PccLocalSpace,
    lambda: &(dyn Fn(Point) -> f64 + Sync),
    mu: &(dyn Fn(Point) -> f64 + Sync),
    recipe: Stabilization,
) -> Result<DMatrix<f64>> {
    let n = space.ndof;
    let [vx, vy] = space.basis_function_derivative_values()?;
    let nq = vx.nrows();
    let pts = &space.quadrature.points;
    let w = &space.quadrature.weights;
    let w_mu: Vec<f64> = (0..nq).map(|q| w[q] * mu(pts[q])).collect();
    let w_la: Vec<f64> = (0..nq).map(|q| w[q] * lambda(pts[q])).collect();
    let zero = DMatrix::zeros(nq, n);
    let cat = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
        let mut m = DMatrix::zeros(nq, 2 * n);
        m.columns_mut(0, n).copy_from(a);
        m.columns_mut(n, n).copy_from(b);
        m
    };
    let e11 = cat(&vx, &zero);
    let e22 = cat(&zero, &vy);
    let e12 = cat(&vy, &vx) * 0.5;
    let div = cat(&vx, &vy);
    let mut k = (weighted_gram(&e11, &e11, &w_mu)
        + weighted_gram(&e22, &e22, &w_mu)
        + weighted_gram(&e12, &e12, &w_mu) * 2.0)
        * 2.0
        + weighted_gram(&div, &div, &w_la);
    k = (&k + k.transpose()) * 0.5;
    for c in 0..2 {
        let s = match recipe {
            Stabilization::DofiDofi => {
                space.stabilization(recipe) * mu(space.polygon.centroid())
            }
            Stabilization::DRecipe => {
                let block = k.view((c * n, c * n), (n, n)).into_owned();
                projected_dof_stabilization(&space.d, &space.pi_nabla, Some(&d_recipe_weights(&block)))
            }
        };
        let mut view = k.view_mut((c * n, c * n), (n, n));
        view += s;
    }
    Ok(k)
}

pub fn assemble_elasticity(
    mesh: &Mesh2D,
    problem: &ElasticityProblem,
    bc: &BoundaryConditionSpec,
    options: &AssemblyOptions,
) -> Result<ElasticityDiscretization> {
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
    let (nu, ns) = (dofs.num_dofs(), dofs.num_strong());
    let elements: Vec<(PccLocalSpace, LocalContribution, Vec<Option<f64>>)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let polygon = mesh.polygon(c)?;
            let space = PccLocalSpace::with_quadrature(&polygon, k, options.quadrature())?;
            let n = space.ndof;
            let matrix = local_elasticity_matrix(&space, problem.lambda, problem.mu, options.stabilization)?;
            let phi = space.basis_function_values(Projection::Pi0km1)?;
            let mut rhs = DVector::zeros(2 * n);
            for (q, (&x, &w)) in space.quadrature.points.iter().zip(&space.quadrature.weights).enumerate() {
                let f = (problem.source)(x);
                for j in 0..n {
                    rhs[j] += w * f[0] * phi[(q, j)];
                    rhs[n + j] += w * f[1] * phi[(q, j)];
                }
            }
            let base = dofs.local_to_global(mesh, c);
            let mut map = base.clone();
            map.extend(offset_map(&base, nu, ns));
            let nv = space.num_vertices();
            let mut strong = vec![None; 2 * n];
            let mut set = |i: usize, g: [f64; 2]| {
                strong[i] = Some(g[0]);
                strong[n + i] = Some(g[1]);
            };
            for i in 0..nv {
                let rec = dofs.vertex(mesh.cells()[c].vertices[i]);
                if rec.kind == DofKind::Strong {
                    set(i, (problem.dirichlet)(rec.problem_marker, polygon.vertices()[i]));
                }
            }
            for e in 0..nv {
                let rec = dofs.local_edge_record(mesh, c, e);
                let tr = &space.edges[e];
                match rec.kind {
                    DofKind::Strong => {
                        for (j, &x) in tr.nodes.iter().enumerate() {
                            set(space.edge_node_dof(e, j + 1), (problem.dirichlet)(rec.problem_marker, x));
                        }
                    }
                    DofKind::Weak => {
                        for (q, (&x, &w)) in tr.points.iter().zip(&tr.weights).enumerate() {
                            let g = (problem.traction)(rec.problem_marker, x, tr.normal);
                            for j in 0..=k {
                                let i = space.edge_node_dof(e, j);
                                rhs[i] += w * g[0] * tr.lagrange[(q, j)];
                                rhs[n + i] += w * g[1] * tr.lagrange[(q, j)];
                            }
                        }
                    }
                    DofKind::Internal => {}
                }
            }
            Ok((space, LocalContribution { matrix, rhs, map }, strong))
        })
        .collect::<Result<_>>()?;

    let mut strong_values = vec![0.0; 2 * ns];
    for (_, c, s) in &elements {
        record_strong(&mut strong_values, &c.map, s);
    }
    let mut system = LinearSystem::new(2 * nu);
    for (_, c, _) in &elements {
        scatter(&mut system, &strong_values, c);
    }
    let (spaces, maps) = elements.into_iter().map(|(s, c, _)| (s, c.map)).unzip();
    Ok(ElasticityDiscretization {
        dofs,
        spaces,
        maps,
        strong_values,
        system,
    })
}
