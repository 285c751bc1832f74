//! Discretize and solve a manufactured problem on one mesh; evaluate the
//! discrete solution and its errors.

use std::collections::BTreeSet;

use nalgebra::DVector;
use polyvem::mesh::Mesh2D;
use polyvem::pde::{
    assemble_darcy, assemble_diffusion, assemble_elasticity, assemble_stokes, residual_check, AssemblyOptions,
    BcKind, BoundaryConditionSpec, DarcyDiscretization, DarcyProblem, DiffusionDiscretization, DiffusionProblem,
    DirectSolver, ElasticityDiscretization, ElasticityProblem, LinearSystem, SparseSolver, StokesDiscretization,
    StokesProblem,
};
use polyvem::quadrature::{polygon_rule, QuadratureRule};
use polyvem::vem::{Projection, Stabilization};
use polyvem::{Point, Result, VemError};

use crate::problems::{Family, ManufacturedProblem};

pub enum Discretization {
    Diffusion(DiffusionDiscretization),
    Elasticity(ElasticityDiscretization),
    Darcy(DarcyDiscretization),
    Stokes(StokesDiscretization),
}

impl Discretization {
    pub fn system(&self) -> &LinearSystem {
        match self {
            Discretization::Diffusion(d) => &d.system,
            Discretization::Elasticity(d) => &d.system,
            Discretization::Darcy(d) => &d.system,
            Discretization::Stokes(d) => &d.system,
        }
    }
}

pub struct Solution {
    pub family: Family,
    pub order: usize,
    pub discretization: Discretization,
    pub x: Vec<f64>,
    /// `||Ax - b||_inf` and the accepted bound.
    pub residual: f64,
    pub residual_bound: f64,
}

/// Errors of a discrete solution against the exact one.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Errors {
    /// Primary field in L2 (through `Pi0_k`).
    pub l2: f64,
    /// Gradient (through `Pi0_{k-1} grad`); divergence in L2 for the mixed family.
    pub h1: f64,
    /// Pressure in L2.
    pub p: Option<f64>,
    /// Distance to the L2 projection of the exact pressure.
    pub pi_p: Option<f64>,
    /// Maximum `|div u_h|` at the error quadrature points.
    pub max_div: Option<f64>,
}

/// Nodal field of a cell, for output.
pub enum FieldValues {
    Scalar(&'static str, Vec<f64>),
    Vector(&'static str, Vec<[f64; 2]>),
}

/// All positive markers of a mesh mapped to `kind`.
pub fn boundary_spec(mesh: &Mesh2D, kind: BcKind) -> BoundaryConditionSpec {
    let markers: BTreeSet<u32> = mesh
        .vertex_markers()
        .iter()
        .chain(mesh.edge_markers())
        .copied()
        .filter(|&m| m > 0)
        .collect();
    BoundaryConditionSpec::uniform(kind, markers)
}

fn zero_normal_data(_: u32, _: Point, _: [f64; 2]) -> f64 {
    0.0
}

fn zero_traction(_: u32, _: Point, _: [f64; 2]) -> [f64; 2] {
    [0.0, 0.0]
}

/// Assembles and solves `problem` on `mesh`; all boundary markers carry
/// the exact solution (essential for primal and Stokes, pressure data for
/// the mixed family).
pub fn solve(
    problem: &ManufacturedProblem,
    family: Family,
    mesh: &Mesh2D,
    order: usize,
    stabilization: Stabilization,
) -> Result<Solution> {
    let options = AssemblyOptions::new(order).with_stabilization(stabilization);
    let discretization = match (problem, family) {
        (ManufacturedProblem::Diffusion { u, diffusion, source, .. }, Family::Pcc) => {
            let dirichlet = |_: u32, x: Point| u(x);
            Discretization::Diffusion(assemble_diffusion(
                mesh,
                &DiffusionProblem {
                    diffusion,
                    source,
                    dirichlet: &dirichlet,
                    neumann: &zero_normal_data,
                },
                &boundary_spec(mesh, BcKind::Strong),
                &options,
            )?)
        }
        (
            ManufacturedProblem::Elasticity {
                u, lambda, mu, source, ..
            },
            Family::Elasticity,
        ) => {
            let dirichlet = |_: u32, x: Point| u(x);
            let (l, m) = (*lambda, *mu);
            let la = move |_: Point| l;
            let mu = move |_: Point| m;
            Discretization::Elasticity(assemble_elasticity(
                mesh,
                &ElasticityProblem {
                    lambda: &la,
                    mu: &mu,
                    source,
                    dirichlet: &dirichlet,
                    traction: &zero_traction,
                },
                &boundary_spec(mesh, BcKind::Strong),
                &options,
            )?)
        }
        (
            ManufacturedProblem::Darcy {
                p, u, k_tensor, source, ..
            },
            Family::Mcc,
        ) => {
            let pressure = |_: u32, x: Point| p(x);
            let flux = |_: u32, x: Point| u(x);
            Discretization::Darcy(assemble_darcy(
                mesh,
                &DarcyProblem {
                    k_tensor,
                    source,
                    pressure: &pressure,
                    flux: &flux,
                },
                &boundary_spec(mesh, BcKind::Weak),
                &options,
            )?)
        }
        (ManufacturedProblem::Stokes { u, nu, source, .. }, Family::DfStokes | Family::DfStokesReduced) => {
            let dirichlet = |_: u32, x: Point| u(x);
            let n = *nu;
            let viscosity = move |_: Point| n;
            Discretization::Stokes(assemble_stokes(
                mesh,
                &StokesProblem {
                    viscosity: &viscosity,
                    source,
                    dirichlet: &dirichlet,
                    traction: &zero_traction,
                },
                &boundary_spec(mesh, BcKind::Strong),
                &options,
                family == Family::DfStokesReduced,
            )?)
        }
        _ => {
            return Err(VemError::Unsupported(format!(
                "problem data does not match family {family}"
            )))
        }
    };
    let solver = DirectSolver::default();
    let system = discretization.system();
    let x = solver.solve(system)?;
    let a = system.matrix();
    let residual = residual_check(&a, &x, system.rhs(), solver.residual_tolerance)?;
    let inf = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let residual_bound = solver.residual_tolerance * (a.norm_inf() * inf(&x) + inf(system.rhs()));
    Ok(Solution {
        family,
        order,
        discretization,
        x,
        residual,
        residual_bound,
    })
}

fn error_rule(mesh: &Mesh2D, cell: usize, order: usize) -> Result<QuadratureRule> {
    polygon_rule(&mesh.polygon(cell)?, 2 * order + 4)
}

/// Coefficients of the L2 projection of `f` onto the span of `basis`.
fn l2_projection(
    basis: &polyvem::polybasis::MonomialBasis,
    rule: &QuadratureRule,
    f: &dyn Fn(Point) -> f64,
) -> Result<DVector<f64>> {
    let v = basis.vandermonde(&rule.points)?;
    let w = DVector::from_column_slice(&rule.weights);
    let vw = DVector::from_iterator(v.nrows(), (0..v.nrows()).map(|q| w[q] * f(rule.points[q])));
    let mass = v.transpose() * nalgebra::DMatrix::from_diagonal(&w) * &v;
    mass.lu()
        .solve(&(v.transpose() * vw))
        .ok_or(VemError::SingularLocal("pressure projection"))
}

impl Solution {
    /// Errors against the exact solution with `2k + 4` exact quadrature.
    pub fn errors(&self, mesh: &Mesh2D, problem: &ManufacturedProblem) -> Result<Errors> {
        let k = self.order;
        let x = &self.x;
        let mut e = Errors::default();
        let (mut l2, mut h1, mut ep, mut epi) = (0.0, 0.0, 0.0, 0.0);
        match (&self.discretization, problem) {
            (Discretization::Diffusion(d), ManufacturedProblem::Diffusion { u, grad, .. }) => {
                for c in 0..mesh.num_cells() {
                    let s = &d.spaces[c];
                    let rule = error_rule(mesh, c, k)?;
                    let dofs = d.local_dofs(c, x);
                    let vals = s.basis_values_at(Projection::Pi0k, &rule.points)? * &dofs;
                    let [gx, gy] = s.derivative_values_at(&rule.points)?;
                    let (gx, gy) = (gx * &dofs, gy * &dofs);
                    for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                        l2 += w * (u(p) - vals[q]).powi(2);
                        let g = grad(p);
                        h1 += w * ((g[0] - gx[q]).powi(2) + (g[1] - gy[q]).powi(2));
                    }
                }
            }
            (Discretization::Elasticity(d), ManufacturedProblem::Elasticity { u, grad, .. }) => {
                for c in 0..mesh.num_cells() {
                    let s = &d.spaces[c];
                    let rule = error_rule(mesh, c, k)?;
                    let dofs = d.local_dofs(c, x);
                    let v = s.basis_values_at(Projection::Pi0k, &rule.points)?;
                    let [gx, gy] = s.derivative_values_at(&rule.points)?;
                    for comp in 0..2 {
                        let vals = &v * &dofs[comp];
                        let (dx, dy) = (&gx * &dofs[comp], &gy * &dofs[comp]);
                        for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                            l2 += w * (u(p)[comp] - vals[q]).powi(2);
                            let g = grad(p)[comp];
                            h1 += w * ((g[0] - dx[q]).powi(2) + (g[1] - dy[q]).powi(2));
                        }
                    }
                }
            }
            (Discretization::Darcy(d), ManufacturedProblem::Darcy { p, u, div_u, .. }) => {
                for c in 0..mesh.num_cells() {
                    let s = &d.spaces[c];
                    let rule = error_rule(mesh, c, k)?;
                    let dofs = d.local_velocity(c, x);
                    let [vx, vy] = s.basis_values_at(&rule.points)?;
                    let (ux, uy) = (vx * &dofs, vy * &dofs);
                    let vp = s.basis.vandermonde(&rule.points)?;
                    let div = &vp * (&s.div * &dofs);
                    let ph = &vp * d.local_pressure(c, x);
                    let pi = &vp * l2_projection(&s.basis, &rule, p)?;
                    for (q, (&pt, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                        let ue = u(pt);
                        l2 += w * ((ue[0] - ux[q]).powi(2) + (ue[1] - uy[q]).powi(2));
                        h1 += w * (div_u(pt) - div[q]).powi(2);
                        ep += w * (p(pt) - ph[q]).powi(2);
                        epi += w * (pi[q] - ph[q]).powi(2);
                    }
                }
                e.p = Some(ep.sqrt());
                e.pi_p = Some(epi.sqrt());
            }
            (Discretization::Stokes(d), ManufacturedProblem::Stokes { u, grad, p, .. }) => {
                let rules = (0..mesh.num_cells())
                    .map(|c| error_rule(mesh, c, k))
                    .collect::<Result<Vec<_>>>()?;
                // Exact pressure normalized to zero mean on this domain.
                let (int_p, area) = rules.iter().fold((0.0, 0.0), |(ip, a), r| {
                    (ip + r.integrate(p), a + r.integrate(|_| 1.0))
                });
                let mean = int_p / area;
                let p0 = |x: Point| p(x) - mean;
                let mut max_div: f64 = 0.0;
                for (c, rule) in rules.iter().enumerate() {
                    let s = &d.spaces[c];
                    let dofs = d.local_velocity(c, x);
                    let [vx, vy] = s.basis_values_at(&rule.points)?;
                    let (ux, uy) = (vx * &dofs, vy * &dofs);
                    let vg = s.pressure_basis().vandermonde(&rule.points)?;
                    let g = [
                        [&vg * (&s.pi0_km1_grad[0][0] * &dofs), &vg * (&s.pi0_km1_grad[0][1] * &dofs)],
                        [&vg * (&s.pi0_km1_grad[1][0] * &dofs), &vg * (&s.pi0_km1_grad[1][1] * &dofs)],
                    ];
                    let div = s.divergence_values_at(&rule.points)? * &dofs;
                    let own = s.divergence_values_at(&s.quadrature.points)? * &dofs;
                    max_div = div.iter().chain(own.iter()).fold(max_div, |m, v| m.max(v.abs()));
                    let pb = s.basis.with_order(if d.reduced { 0 } else { k - 1 });
                    let vp = pb.vandermonde(&rule.points)?;
                    let ph = &vp * d.local_pressure(c, x);
                    let pi = &vp * l2_projection(&pb, rule, &p0)?;
                    for (q, (&pt, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                        let ue = u(pt);
                        l2 += w * ((ue[0] - ux[q]).powi(2) + (ue[1] - uy[q]).powi(2));
                        let ge = grad(pt);
                        for a in 0..2 {
                            for b in 0..2 {
                                h1 += w * (ge[a][b] - g[a][b][q]).powi(2);
                            }
                        }
                        ep += w * (p0(pt) - ph[q]).powi(2);
                        epi += w * (pi[q] - ph[q]).powi(2);
                    }
                }
                e.p = Some(ep.sqrt());
                e.pi_p = Some(epi.sqrt());
                e.max_div = Some(max_div);
            }
            _ => {
                return Err(VemError::Unsupported(
                    "problem data does not match the discretization".into(),
                ))
            }
        }
        e.l2 = l2.sqrt();
        e.h1 = h1.sqrt();
        Ok(e)
    }

    /// Number of unknowns of the global system.
    pub fn num_unknowns(&self) -> usize {
        self.discretization.system().dim()
    }

    /// Projected fields of `cell` at `points`.
    pub fn fields_at(&self, cell: usize, points: &[Point]) -> Result<Vec<FieldValues>> {
        let x = &self.x;
        let zip = |a: DVector<f64>, b: DVector<f64>| a.iter().zip(b.iter()).map(|(p, q)| [*p, *q]).collect();
        Ok(match &self.discretization {
            Discretization::Diffusion(d) => {
                let v = d.spaces[cell].basis_values_at(Projection::Pi0k, points)? * d.local_dofs(cell, x);
                vec![FieldValues::Scalar("u", v.as_slice().to_vec())]
            }
            Discretization::Elasticity(d) => {
                let v = d.spaces[cell].basis_values_at(Projection::Pi0k, points)?;
                let [a, b] = d.local_dofs(cell, x);
                vec![FieldValues::Vector("displacement", zip(&v * a, &v * b))]
            }
            Discretization::Darcy(d) => {
                let s = &d.spaces[cell];
                let dofs = d.local_velocity(cell, x);
                let [vx, vy] = s.basis_values_at(points)?;
                let p = s.basis.vandermonde(points)? * d.local_pressure(cell, x);
                vec![
                    FieldValues::Vector("velocity", zip(vx * &dofs, vy * &dofs)),
                    FieldValues::Scalar("pressure", p.as_slice().to_vec()),
                ]
            }
            Discretization::Stokes(d) => {
                let s = &d.spaces[cell];
                let dofs = d.local_velocity(cell, x);
                let [vx, vy] = s.basis_values_at(points)?;
                let pb = s.basis.with_order(if d.reduced { 0 } else { self.order - 1 });
                let p = pb.vandermonde(points)? * d.local_pressure(cell, x);
                vec![
                    FieldValues::Vector("velocity", zip(vx * &dofs, vy * &dofs)),
                    FieldValues::Scalar("pressure", p.as_slice().to_vec()),
                ]
            }
        })
    }
}
