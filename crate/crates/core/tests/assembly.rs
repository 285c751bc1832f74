//! Global assembly: patch tests, symmetry, null spaces and element-order
//! independence on small meshes.

mod common;

use common::{marked, max_abs_diff, Poly};
use nalgebra::DVector;
use polyvem::mesh::{Mesh2D, StructuredKind};
use polyvem::pde::{
    assemble_darcy, assemble_diffusion, assemble_elasticity, assemble_stokes, AssemblyOptions, BcKind,
    BoundaryConditionSpec, DarcyProblem, DiffusionProblem, DirectSolver, ElasticityProblem, SparseSolver,
    StokesProblem,
};
use polyvem::vem::Stabilization;
use polyvem::Point;

const PATCH_TOL: f64 = 1e-8;

fn mixed_bc() -> BoundaryConditionSpec {
    BoundaryConditionSpec::new()
        .with(1, BcKind::Strong)
        .with(2, BcKind::Strong)
        .with(3, BcKind::Weak)
        .with(4, BcKind::Weak)
}

fn all(kind: BcKind) -> BoundaryConditionSpec {
    BoundaryConditionSpec::uniform(kind, 1..=4)
}

fn hanging() -> Mesh2D {
    marked(StructuredKind::HangingQuads, 3)
}

fn diffusion_patch(mesh: &Mesh2D, k: usize, recipe: Stabilization) -> f64 {
    let u = Poly::sample(k as i32, 7 + k as u64);
    let (ux, uy, lap) = (u.dx(), u.dy(), u.laplacian());
    let diffusion = |_: Point| [[1.0, 0.0], [0.0, 1.0]];
    let source = |x: Point| -lap.eval(x);
    let dirichlet = |_: u32, x: Point| u.eval(x);
    let neumann = |_: u32, x: Point, n: [f64; 2]| ux.eval(x) * n[0] + uy.eval(x) * n[1];
    let problem = DiffusionProblem {
        diffusion: &diffusion,
        source: &source,
        dirichlet: &dirichlet,
        neumann: &neumann,
    };
    let options = AssemblyOptions::new(k).with_stabilization(recipe);
    let disc = assemble_diffusion(mesh, &problem, &mixed_bc(), &options).unwrap();
    let x = DirectSolver::default().solve(&disc.system).unwrap();
    (0..mesh.num_cells())
        .map(|c| {
            let exact = disc.spaces[c].interpolate(|p| u.eval(p));
            max_abs_diff(disc.local_dofs(c, &x).as_slice(), exact.as_slice())
        })
        .fold(0.0, f64::max)
}

#[test]
fn diffusion_patch_test() {
    let mesh = hanging();
    for k in 1..=3 {
        for recipe in [Stabilization::DofiDofi, Stabilization::DRecipe] {
            let err = diffusion_patch(&mesh, k, recipe);
            assert!(err < PATCH_TOL, "k = {k}, {recipe}: {err:e}");
        }
    }
}

#[test]
fn elasticity_patch_test() {
    let mesh = hanging();
    let (lambda, mu) = (1.5, 0.7);
    for k in 1..=3 {
        let u = [Poly::sample(k as i32, 3), Poly::sample(k as i32, 4)];
        let d = |p: &Poly| (p.dx(), p.dy());
        let (u0x, u0y) = d(&u[0]);
        let (u1x, u1y) = d(&u[1]);
        let (u0xx, u0xy, u0yy) = (u0x.dx(), u0x.dy(), u0y.dy());
        let (u1xx, u1xy, u1yy) = (u1x.dx(), u1x.dy(), u1y.dy());
        let source = |x: Point| {
            let f0 = 2.0 * mu * u0xx.eval(x)
                + mu * (u0yy.eval(x) + u1xy.eval(x))
                + lambda * (u0xx.eval(x) + u1xy.eval(x));
            let f1 = 2.0 * mu * u1yy.eval(x)
                + mu * (u1xx.eval(x) + u0xy.eval(x))
                + lambda * (u0xy.eval(x) + u1yy.eval(x));
            [-f0, -f1]
        };
        let dirichlet = |_: u32, x: Point| [u[0].eval(x), u[1].eval(x)];
        let traction = |_: u32, x: Point, n: [f64; 2]| {
            let div = u0x.eval(x) + u1y.eval(x);
            let s00 = 2.0 * mu * u0x.eval(x) + lambda * div;
            let s11 = 2.0 * mu * u1y.eval(x) + lambda * div;
            let s01 = mu * (u0y.eval(x) + u1x.eval(x));
            [s00 * n[0] + s01 * n[1], s01 * n[0] + s11 * n[1]]
        };
        let la = |_: Point| lambda;
        let m = |_: Point| mu;
        let problem = ElasticityProblem {
            lambda: &la,
            mu: &m,
            source: &source,
            dirichlet: &dirichlet,
            traction: &traction,
        };
        for recipe in [Stabilization::DofiDofi, Stabilization::DRecipe] {
            let options = AssemblyOptions::new(k).with_stabilization(recipe);
            let disc = assemble_elasticity(&mesh, &problem, &mixed_bc(), &options).unwrap();
            let x = DirectSolver::default().solve(&disc.system).unwrap();
            for c in 0..mesh.num_cells() {
                let got = disc.local_dofs(c, &x);
                for comp in 0..2 {
                    let exact = disc.spaces[c].interpolate(|p| u[comp].eval(p));
                    let err = max_abs_diff(got[comp].as_slice(), exact.as_slice());
                    assert!(err < PATCH_TOL, "k = {k}, {recipe}, comp {comp}: {err:e}");
                }
            }
        }
    }
}

#[test]
fn darcy_patch_test() {
    let mesh = hanging();
    for k in 0..=2 {
        let p = Poly::sample(k as i32 + 1, 11);
        let (px, py, lap) = (p.dx(), p.dy(), p.laplacian());
        let k_tensor = |_: Point| [[1.0, 0.0], [0.0, 1.0]];
        let source = |x: Point| -lap.eval(x);
        let pressure = |_: u32, x: Point| p.eval(x);
        let flux = |_: u32, x: Point| [-px.eval(x), -py.eval(x)];
        let problem = DarcyProblem {
            k_tensor: &k_tensor,
            source: &source,
            pressure: &pressure,
            flux: &flux,
        };
        let bc = BoundaryConditionSpec::new()
            .with(1, BcKind::Weak)
            .with(2, BcKind::Strong)
            .with(3, BcKind::Weak)
            .with(4, BcKind::Strong);
        let disc = assemble_darcy(&mesh, &problem, &bc, &AssemblyOptions::new(k)).unwrap();
        let x = DirectSolver::default().solve(&disc.system).unwrap();
        for c in 0..mesh.num_cells() {
            let s = &disc.spaces[c];
            let exact = s.interpolate(|x| flux(0, x));
            let err = max_abs_diff(disc.local_velocity(c, &x).as_slice(), exact.as_slice());
            assert!(err < PATCH_TOL, "k = {k} velocity: {err:e}");
            let mut moments = DVector::zeros(s.basis.len());
            for (&q, &w) in s.quadrature.points.iter().zip(&s.quadrature.weights) {
                moments += DVector::from_vec(s.basis.eval(q)) * (w * p.eval(q));
            }
            let proj = s.mass.clone().lu().solve(&moments).unwrap();
            let err = max_abs_diff(disc.local_pressure(c, &x).as_slice(), proj.as_slice());
            assert!(err < PATCH_TOL, "k = {k} pressure: {err:e}");
        }
    }
}

fn stokes_patch(mesh: &Mesh2D, k: usize, reduced: bool) -> (f64, f64) {
    let psi = Poly::sample(k as i32 + 1, 5);
    let u = [psi.dy(), psi.dx()];
    let p0 = Poly::sample(k as i32 - 1, 9);
    let p = p0.clone().add_constant(-p0.mean_unit_square());
    let (lap0, lap1) = (u[0].laplacian(), u[1].laplacian());
    let (px, py) = (p.dx(), p.dy());
    let source = |x: Point| [-lap0.eval(x) - px.eval(x), lap1.eval(x) - py.eval(x)];
    let dirichlet = |_: u32, x: Point| [u[0].eval(x), -u[1].eval(x)];
    let traction = |_: u32, _: Point, _: [f64; 2]| [0.0, 0.0];
    let nu = |_: Point| 1.0;
    let problem = StokesProblem {
        viscosity: &nu,
        source: &source,
        dirichlet: &dirichlet,
        traction: &traction,
    };
    let disc = assemble_stokes(mesh, &problem, &all(BcKind::Strong), &AssemblyOptions::new(k), reduced).unwrap();
    let x = DirectSolver::default().solve(&disc.system).unwrap();
    let mut ev: f64 = 0.0;
    let mut ep: f64 = 0.0;
    for c in 0..mesh.num_cells() {
        let s = &disc.spaces[c];
        let exact = s.interpolate(|x| dirichlet(0, x)).unwrap();
        ev = ev.max(max_abs_diff(disc.local_velocity(c, &x).as_slice(), exact.as_slice()));
        let ph = disc.local_pressure(c, &x);
        let basis = s.basis.with_order(k - 1);
        // Full: pressure values at quadrature points; reduced: cell means.
        if !reduced {
            for &q in &s.quadrature.points {
                let v: f64 = basis.eval(q).iter().zip(ph.iter()).map(|(a, b)| a * b).sum();
                ep = ep.max((v - p.eval(q)).abs());
            }
        }
        if reduced {
            let mean: f64 = s
                .quadrature
                .points
                .iter()
                .zip(&s.quadrature.weights)
                .map(|(&q, &w)| w * p.eval(q))
                .sum::<f64>()
                / s.polygon.area();
            ep = ep.max((ph[0] - mean).abs());
        }
    }
    (ev, ep)
}

#[test]
fn stokes_patch_test() {
    let mesh = hanging();
    for k in 2..=3 {
        for reduced in [false, true] {
            let (ev, ep) = stokes_patch(&mesh, k, reduced);
            assert!(ev < PATCH_TOL && ep < PATCH_TOL, "k = {k}, reduced {reduced}: {ev:e} {ep:e}");
        }
    }
}

#[test]
fn assembled_matrices_are_symmetric() {
    let mesh = hanging();
    let one = |_: Point| 1.0;
    let id = |_: Point| [[1.0, 0.0], [0.0, 1.0]];
    let zero2 = |_: Point| [0.0, 0.0];
    let zero_bc = |_: u32, _: Point| 0.0;
    let zero_n = |_: u32, _: Point, _: [f64; 2]| 0.0;
    let zero_v = |_: u32, _: Point| [0.0, 0.0];
    let zero_t = |_: u32, _: Point, _: [f64; 2]| [0.0, 0.0];
    let check = |sys: &polyvem::pde::LinearSystem| {
        let a = sys.matrix();
        assert!(a.max_asymmetry() <= 1e-12 * a.norm_inf(), "{:e}", a.max_asymmetry());
    };
    let d = DiffusionProblem {
        diffusion: &id,
        source: &one,
        dirichlet: &zero_bc,
        neumann: &zero_n,
    };
    check(&assemble_diffusion(&mesh, &d, &mixed_bc(), &AssemblyOptions::new(3)).unwrap().system);
    let e = ElasticityProblem {
        lambda: &one,
        mu: &one,
        source: &zero2,
        dirichlet: &zero_v,
        traction: &zero_t,
    };
    check(&assemble_elasticity(&mesh, &e, &mixed_bc(), &AssemblyOptions::new(2)).unwrap().system);
    let m = DarcyProblem {
        k_tensor: &id,
        source: &one,
        pressure: &zero_bc,
        flux: &zero_v,
    };
    check(&assemble_darcy(&mesh, &m, &mixed_bc(), &AssemblyOptions::new(1)).unwrap().system);
    let s = StokesProblem {
        viscosity: &one,
        source: &zero2,
        dirichlet: &zero_v,
        traction: &zero_t,
    };
    check(&assemble_stokes(&mesh, &s, &all(BcKind::Strong), &AssemblyOptions::new(2), false).unwrap().system);
}

#[test]
fn pure_neumann_diffusion_has_constant_null_space() {
    let mesh = hanging();
    let id = |_: Point| [[2.0, 0.5], [0.5, 1.0]];
    let zero = |_: Point| 0.0;
    let zero_bc = |_: u32, _: Point| 0.0;
    let zero_n = |_: u32, _: Point, _: [f64; 2]| 0.0;
    let d = DiffusionProblem {
        diffusion: &id,
        source: &zero,
        dirichlet: &zero_bc,
        neumann: &zero_n,
    };
    for k in 1..=3 {
        let disc = assemble_diffusion(&mesh, &d, &all(BcKind::Weak), &AssemblyOptions::new(k)).unwrap();
        // Constant function: ones on point DOFs, moments of 1 on cell DOFs.
        let mut ones = vec![0.0; disc.dofs.num_dofs()];
        for (c, map) in disc.maps.iter().enumerate() {
            let local = disc.spaces[c].interpolate(|_| 1.0);
            for (dof, v) in map.iter().zip(local.iter()) {
                if let polyvem::pde::Slot::Unknown(i) = dof.slot {
                    ones[i] = *v;
                }
            }
        }
        let a = disc.system.matrix();
        let r = a.mul_vec(&ones);
        assert!(r.iter().all(|v| v.abs() < 1e-11 * a.norm_inf()), "k = {k}");
    }
}

#[test]
fn elasticity_rigid_motions_are_in_the_kernel() {
    let mesh = hanging();
    let one = |_: Point| 1.0;
    let zero2 = |_: Point| [0.0, 0.0];
    let zero_v = |_: u32, _: Point| [0.0, 0.0];
    let zero_t = |_: u32, _: Point, _: [f64; 2]| [0.0, 0.0];
    let e = ElasticityProblem {
        lambda: &one,
        mu: &one,
        source: &zero2,
        dirichlet: &zero_v,
        traction: &zero_t,
    };
    let disc = assemble_elasticity(&mesh, &e, &all(BcKind::Weak), &AssemblyOptions::new(2)).unwrap();
    let a = disc.system.matrix();
    let motions: [fn(Point) -> [f64; 2]; 3] = [|_| [1.0, 0.0], |_| [0.0, 1.0], |x| [-x[1], x[0]]];
    for r in motions {
        let mut v = vec![0.0; a.dim];
        for (c, map) in disc.maps.iter().enumerate() {
            let s = &disc.spaces[c];
            let mut local = s.interpolate(|x| r(x)[0]).as_slice().to_vec();
            local.extend(s.interpolate(|x| r(x)[1]).iter());
            for (dof, val) in map.iter().zip(local) {
                if let polyvem::pde::Slot::Unknown(i) = dof.slot {
                    v[i] = val;
                }
            }
        }
        let res = a.mul_vec(&v);
        assert!(res.iter().all(|x| x.abs() < 1e-11 * a.norm_inf()));
    }
}

#[test]
fn solution_is_independent_of_cell_order() {
    let mesh = hanging();
    let n = mesh.num_cells();
    let order: Vec<usize> = (0..n).rev().collect();
    let permuted = mesh.permute_cells(&order).unwrap();
    let id = |_: Point| [[1.0, 0.0], [0.0, 1.0]];
    let src = |x: Point| (3.0 * x[0]).sin() + x[1];
    let g = |_: u32, x: Point| x[0] * x[1];
    let zero_n = |_: u32, _: Point, _: [f64; 2]| 0.5;
    let d = DiffusionProblem {
        diffusion: &id,
        source: &src,
        dirichlet: &g,
        neumann: &zero_n,
    };
    let opts = AssemblyOptions::new(3);
    let a = assemble_diffusion(&mesh, &d, &mixed_bc(), &opts).unwrap();
    let b = assemble_diffusion(&permuted, &d, &mixed_bc(), &opts).unwrap();
    let xa = DirectSolver::default().solve(&a.system).unwrap();
    let xb = DirectSolver::default().solve(&b.system).unwrap();
    for (new, &old) in order.iter().enumerate() {
        let err = max_abs_diff(a.local_dofs(old, &xa).as_slice(), b.local_dofs(new, &xb).as_slice());
        assert!(err < 1e-12, "cell {old}: {err:e}");
    }
}

#[test]
fn mixed_rejects_weighted_stabilization() {
    let mesh = marked(StructuredKind::Quads, 2);
    let id = |_: Point| [[1.0, 0.0], [0.0, 1.0]];
    let one = |_: Point| 1.0;
    let zero_bc = |_: u32, _: Point| 0.0;
    let zero_v = |_: u32, _: Point| [0.0, 0.0];
    let m = DarcyProblem {
        k_tensor: &id,
        source: &one,
        pressure: &zero_bc,
        flux: &zero_v,
    };
    let opts = AssemblyOptions::new(0).with_stabilization(Stabilization::DRecipe);
    assert!(assemble_darcy(&mesh, &m, &all(BcKind::Weak), &opts).is_err());
}
