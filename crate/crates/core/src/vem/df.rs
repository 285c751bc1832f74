//! Divergence-free local space of order `k >= 2` for the Stokes problem.
//!
//! Local DOFs, in order:
//! * both velocity components at each vertex, `(x, y)` per vertex;
//! * both components at the `k-1` interior Gauss-Lobatto nodes of each edge;
//! * scaled moments `|E|^{-1} int v . g` against `G^perp_{k-2}`;
//! * scaled divergence moments `|E|^{-1} int div(v) (m_b - mean(m_b))`,
//!   `b = 1 .. n_{k-1} - 1`. Testing against zero-mean monomials makes the
//!   reduced space (`div v` constant) exactly the set where these vanish.

use nalgebra::{DMatrix, DVector};

use super::common::{
    edge_traces, mass_matrix, projected_dof_stabilization, solve_dense, EdgeTrace,
};
use crate::error::{Result, VemError};
use crate::geometry::Polygon2D;
use crate::polybasis::{build_grad_decomposition, n_perp, poly_dim, GradDecomposition, MonomialBasis};
use crate::quadrature::{gauss_segment, polygon_rule, QuadratureRule};
use crate::Point;

#[derive(Clone, Debug)]
pub struct DfLocalSpace {
    pub polygon: Polygon2D,
    pub order: usize,
    pub ndof: usize,
    /// Scaled monomials of order `k`.
    pub basis: MonomialBasis,
    pub quadrature: QuadratureRule,
    pub edges: Vec<EdgeTrace>,
    /// Complement decomposition of order `k`; its first `n^perp_{k-2}`
    /// rows span `G^perp_{k-2}`.
    pub decomposition: GradDecomposition,
    /// Mass matrix of `P_k`.
    pub mass: DMatrix<f64>,
    /// DOFs of the vector monomials, `Ndof x 2 n_k`.
    pub d: DMatrix<f64>,
    /// Coefficients of `div v` in `P_{k-1}`, `n_{k-1} x Ndof`.
    pub div: DMatrix<f64>,
    /// Componentwise H1 projection, `2 n_k x Ndof`.
    pub pi_nabla: DMatrix<f64>,
    /// L2 projection, `2 n_k x Ndof`.
    pub pi0_k: DMatrix<f64>,
    /// `pi0_km1_grad[c][dir]`: projection of `d v_c / d x_dir`, `n_{k-1} x Ndof`.
    pub pi0_km1_grad: [[DMatrix<f64>; 2]; 2],
}

/// Kept DOFs of the reduced space; the remaining (divergence) DOFs are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DfReduction {
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    /// Pressure DOFs per cell in the reduced pair.
    pub pressure_dim: usize,
}

impl DfReduction {
    /// `Ndof x kept` injection matrix extending kept DOFs by zeros.
    pub fn prolongation(&self) -> DMatrix<f64> {
        let n = self.kept.len() + self.dropped.len();
        let mut p = DMatrix::zeros(n, self.kept.len());
        for (j, &i) in self.kept.iter().enumerate() {
            p[(i, j)] = 1.0;
        }
        p
    }
}

impl DfLocalSpace {
    /// `2 (N_v + N_e (k-1)) + n^perp_{k-2} + n_{k-1} - 1`.
    pub fn ndof_for(num_vertices: usize, k: usize) -> usize {
        2 * num_vertices * k + n_perp(k as i64 - 2) + poly_dim(2, k as i64 - 1) - 1
    }

    pub fn new(polygon: &Polygon2D, k: usize) -> Result<Self> {
        Self::with_quadrature(polygon, k, 2 * k + 2)
    }

    pub fn with_quadrature(polygon: &Polygon2D, k: usize, quadrature_order: usize) -> Result<Self> {
        if k < 2 {
            return Err(VemError::Order {
                space: "divergence-free",
                order: k,
                min: 2,
            });
        }
        let nv = polygon.num_vertices();
        let ndof = Self::ndof_for(nv, k);
        let area = polygon.area();
        let basis = MonomialBasis::new(k, polygon.centroid(), polygon.diameter())?;
        let nk = basis.len();
        let nkm1 = poly_dim(2, k as i64 - 1);
        let nkm2 = poly_dim(2, k as i64 - 2);
        let basis_km1 = basis.with_order(k - 1);
        let basis_km2 = basis.with_order(k - 2);
        let higher = basis.with_order(k + 1);
        let quadrature = polygon_rule(polygon, quadrature_order.max(2 * k))?;
        let mass = mass_matrix(&quadrature, &basis, &basis);
        let mass_km1 = mass.view((0, 0), (nkm1, nkm1)).into_owned();
        let edges = edge_traces(polygon, k, k + 2)?;
        let decomposition = build_grad_decomposition(&basis)?;
        let low_dec = build_grad_decomposition(&basis_km2)?;
        let np_low = low_dec.n_perp();
        let off_perp = 2 * nv * k;
        let off_div = off_perp + np_low;

        let node_dof = |e: usize, j: usize, c: usize| -> usize {
            if j == 0 {
                2 * e + c
            } else if j == k {
                2 * ((e + 1) % nv) + c
            } else {
                2 * nv + 2 * (e * (k - 1) + j - 1) + c
            }
        };
        // Boundary integrals int_{dE} v . g(x, n) for vector test fields,
        // one row per test field.
        let boundary = |rows: usize, g: &dyn Fn(Point, [f64; 2]) -> Vec<[f64; 2]>| {
            let mut out = DMatrix::zeros(rows, ndof);
            for (e, tr) in edges.iter().enumerate() {
                for (q, (&x, &w)) in tr.points.iter().zip(&tr.weights).enumerate() {
                    let vals = g(x, tr.normal);
                    for j in 0..=k {
                        let l = w * tr.lagrange[(q, j)];
                        for (r, gv) in vals.iter().enumerate() {
                            for c in 0..2 {
                                out[(r, node_dof(e, j, c))] += l * gv[c];
                            }
                        }
                    }
                }
            }
            out
        };

        // Divergence moments against P_{k-1}.
        let flux = boundary(1, &|_, n| vec![n]);
        let mean: Vec<f64> = (0..nkm1).map(|b| mass[(0, b)] / area).collect();
        let mut div_moments = DMatrix::zeros(nkm1, ndof);
        for b in 0..nkm1 {
            div_moments.row_mut(b).copy_from(&(flux.row(0) * mean[b]));
            if b > 0 {
                div_moments[(b, off_div + b - 1)] += area;
            }
        }
        div_moments.row_mut(0).copy_from(&flux.row(0));
        let div = solve_dense(mass_km1.clone(), &div_moments, "divergence")?;

        // Moments int v . p for p in [P_{k-2}]^2 (vector monomial order).
        let nn_low = low_dec.n_nabla();
        let mut low_t = boundary(nn_low, &|x, n| {
            basis_km1.eval(x)[1..].iter().map(|m| [m * n[0], m * n[1]]).collect()
        });
        for a in 0..nn_low {
            let r = div_moments.row(a + 1).into_owned();
            low_t.row_mut(a).zip_apply(&r, |x, y| *x -= y);
        }
        let mut low_full = DMatrix::zeros(2 * nkm2, ndof);
        low_full.rows_mut(0, nn_low).copy_from(&low_t);
        for r in 0..np_low {
            low_full[(nn_low + r, off_perp + r)] = area;
        }
        let moments = solve_dense(low_dec.stacked(), &low_full, "vector moments")?;

        // DOFs of vector monomials.
        let mut d = DMatrix::zeros(ndof, 2 * nk);
        for (i, &v) in polygon.vertices().iter().enumerate() {
            let m = basis.eval(v);
            for c in 0..2 {
                d.view_mut((2 * i + c, c * nk), (1, nk)).copy_from_slice(&m);
            }
        }
        for (e, tr) in edges.iter().enumerate() {
            for (j, &x) in tr.nodes.iter().enumerate() {
                let m = basis.eval(x);
                for c in 0..2 {
                    d.view_mut((node_dof(e, j + 1, c), c * nk), (1, nk)).copy_from_slice(&m);
                }
            }
        }
        if np_low > 0 {
            // int g_r . (m_i e_c) with g_r in [P_{k-2}]^2.
            let h_low = mass.view((0, 0), (nkm2, nk));
            for r in 0..np_low {
                for c in 0..2 {
                    for i in 0..nk {
                        let s: f64 = (0..nkm2)
                            .map(|l| low_dec.t_perp[(r, c * nkm2 + l)] * h_low[(l, i)])
                            .sum();
                        d[(off_perp + r, c * nk + i)] = s / area;
                    }
                }
            }
        }
        let der_k = [basis.derivative_matrix(0), basis.derivative_matrix(1)];
        for b in 1..nkm1 {
            for c in 0..2 {
                for i in 0..nk {
                    let s: f64 = (0..nkm1)
                        .map(|r| der_k[c][(r, i)] * (mass[(r, b)] - mass[(r, 0)] * mean[b]))
                        .sum();
                    d[(off_div + b - 1, c * nk + i)] = s / area;
                }
            }
        }

        // Componentwise H1 projection.
        let lap = basis.laplacian_matrix();
        let bnd_grad = boundary(nk, &|x, n| {
            let [gx, gy] = basis.eval_gradient(x);
            (0..nk).map(|a| [gx[a] * n[0] + gy[a] * n[1], 0.0]).collect()
        });
        let mut b = DMatrix::zeros(2 * nk, ndof);
        for c in 0..2 {
            for a in 1..nk {
                let mut row = DVector::zeros(ndof);
                for (j, col) in bnd_grad.row(a).iter().enumerate() {
                    // Same trace weights for both components: shift x -> c.
                    if j % 2 == 0 && j < off_perp {
                        row[j + c] = *col;
                    }
                }
                for r in 0..nkm2 {
                    row -= moments.row(c * nkm2 + r).transpose() * lap[(r, a)];
                }
                b.row_mut(c * nk + a).copy_from(&row.transpose());
            }
            b.row_mut(c * nk).copy_from(&(moments.row(c * nkm2) / area));
        }
        let pi_nabla = solve_dense(&b * &d, &b, "H1 projection")?;

        // Gradient projection onto P_{k-1}, by parts.
        let mut pi0_km1_grad: [[DMatrix<f64>; 2]; 2] = Default::default();
        for (c, blocks) in pi0_km1_grad.iter_mut().enumerate() {
            for (dir, block) in blocks.iter_mut().enumerate() {
                let der = basis_km1.derivative_matrix(dir);
                let mut rhs = boundary(nkm1, &|x, n| {
                    basis_km1
                        .eval(x)
                        .into_iter()
                        .map(|m| {
                            let mut v = [0.0; 2];
                            v[c] = m * n[dir];
                            v
                        })
                        .collect()
                });
                for bta in 0..nkm1 {
                    for r in 0..nkm2 {
                        let mrow = moments.row(c * nkm2 + r).into_owned() * der[(r, bta)];
                        rhs.row_mut(bta).zip_apply(&mrow, |x, y| *x -= y);
                    }
                }
                *block = solve_dense(mass_km1.clone(), &rhs, "gradient projection")?;
            }
        }

        // L2 projection onto [P_k]^2 through the order-k decomposition.
        let nn = decomposition.n_nabla();
        let np = decomposition.n_perp();
        let mixed = mass_matrix(&quadrature, &basis_km1, &higher);
        let mut b_t = boundary(nn, &|x, n| {
            higher.eval(x)[1..].iter().map(|m| [m * n[0], m * n[1]]).collect()
        });
        let corr = mixed.columns(1, nn).transpose() * &div;
        b_t.zip_apply(&corr, |x, y| *x -= y);
        let mut hh = DMatrix::zeros(2 * nk, 2 * nk);
        hh.view_mut((0, 0), (nk, nk)).copy_from(&mass);
        hh.view_mut((nk, nk), (nk, nk)).copy_from(&mass);
        let enhanced = &decomposition.t_perp * &hh * &pi_nabla;
        let mut full_t = DMatrix::zeros(2 * nk, ndof);
        full_t.rows_mut(0, nn).copy_from(&b_t);
        for r in 0..np {
            if r < np_low {
                full_t[(nn + r, off_perp + r)] = area;
            } else {
                full_t.row_mut(nn + r).copy_from(&enhanced.row(r));
            }
        }
        let b_p = solve_dense(decomposition.stacked(), &full_t, "vector basis change")?;
        // Gram matrix from the DOFs (equal to `hh` in exact arithmetic), so
        // that reproduction does not degrade with the mass conditioning.
        let pi0_k = solve_dense(&b_p * &d, &b_p, "vector L2 projection")?;

        Ok(Self {
            polygon: polygon.clone(),
            order: k,
            ndof,
            basis,
            quadrature,
            edges,
            decomposition,
            mass,
            d,
            div,
            pi_nabla,
            pi0_k,
            pi0_km1_grad,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.polygon.num_vertices()
    }

    /// Index of the first internal (complement) DOF.
    pub fn perp_offset(&self) -> usize {
        2 * self.num_vertices() * self.order
    }

    /// Index of the first divergence DOF.
    pub fn div_offset(&self) -> usize {
        self.perp_offset() + n_perp(self.order as i64 - 2)
    }

    /// Pressure basis `P_{k-1}(E)`.
    pub fn pressure_basis(&self) -> MonomialBasis {
        self.basis.with_order(self.order - 1)
    }

    /// `B[(a, j)] = int div(phi_j) m_a` for the given pressure basis
    /// (a leading subset of `P_{k-1}`).
    pub fn divergence_matrix(&self, pressure: &MonomialBasis) -> Result<DMatrix<f64>> {
        let n = pressure.len();
        if n > self.div.nrows() {
            return Err(VemError::Dimension(format!(
                "pressure space of dimension {n} exceeds P_{}",
                self.order - 1
            )));
        }
        Ok(self.mass.view((0, 0), (n, self.div.nrows())) * &self.div)
    }

    /// Dofi-dofi stabilization on `(I - D Pi_nabla)`.
    pub fn stabilization(&self) -> DMatrix<f64> {
        projected_dof_stabilization(&self.d, &self.pi_nabla, None)
    }

    /// Reduced space: drops the divergence DOFs, keeps a constant pressure.
    pub fn reduction(&self) -> DfReduction {
        let off = self.div_offset();
        DfReduction {
            kept: (0..off).collect(),
            dropped: (off..self.ndof).collect(),
            pressure_dim: 1,
        }
    }

    /// `int grad_proj(phi_i) : grad_proj(phi_j)` with unit viscosity.
    pub fn consistency_matrix(&self) -> DMatrix<f64> {
        let n = self.div.nrows();
        let h = self.mass.view((0, 0), (n, n));
        let mut k = DMatrix::zeros(self.ndof, self.ndof);
        for blocks in &self.pi0_km1_grad {
            for p in blocks {
                k += p.transpose() * h * p;
            }
        }
        k
    }

    /// Projected velocity basis at `points`, one matrix per component.
    pub fn basis_values_at(&self, points: &[Point]) -> Result<[DMatrix<f64>; 2]> {
        let v = self.basis.vandermonde(points)?;
        let nk = self.basis.len();
        Ok([&v * self.pi0_k.rows(0, nk), &v * self.pi0_k.rows(nk, nk)])
    }

    /// Divergence of the basis functions at `points`.
    pub fn divergence_values_at(&self, points: &[Point]) -> Result<DMatrix<f64>> {
        Ok(self.pressure_basis().vandermonde(points)? * &self.div)
    }

    /// DOF vector of a smooth vector field.
    pub fn interpolate(&self, v: impl Fn(Point) -> [f64; 2]) -> Result<DVector<f64>> {
        let k = self.order;
        let nv = self.num_vertices();
        let area = self.polygon.area();
        let nk = self.basis.len();
        let nkm1 = poly_dim(2, k as i64 - 1);
        let nkm2 = poly_dim(2, k as i64 - 2);
        let mut dofs = DVector::zeros(self.ndof);
        for (i, &x) in self.polygon.vertices().iter().enumerate() {
            let f = v(x);
            dofs[2 * i] = f[0];
            dofs[2 * i + 1] = f[1];
        }
        for (e, tr) in self.edges.iter().enumerate() {
            for (j, &x) in tr.nodes.iter().enumerate() {
                let f = v(x);
                let base = 2 * nv + 2 * (e * (k - 1) + j);
                dofs[base] = f[0];
                dofs[base + 1] = f[1];
            }
        }
        let km1 = self.pressure_basis();
        let km2 = self.basis.with_order(k - 2);
        let mean: Vec<f64> = (0..nkm1).map(|b| self.mass[(0, b)] / area).collect();
        let np_low = n_perp(k as i64 - 2);
        let off_perp = self.perp_offset();
        let off_div = self.div_offset();
        let t = &self.decomposition.t_perp;
        // Divergence moments by parts: int_{dE} (v.n) q - int v . grad q.
        let g = gauss_segment(k + 3)?;
        for e in self.polygon.edges() {
            let (pts, ws) = g.on_edge(e);
            for (&x, &w) in pts.iter().zip(&ws) {
                let f = v(x);
                let vn = f[0] * e.normal[0] + f[1] * e.normal[1];
                let m = km1.eval(x);
                for b in 1..nkm1 {
                    dofs[off_div + b - 1] += w * vn * (m[b] - mean[b]) / area;
                }
            }
        }
        for (&x, &w) in self.quadrature.points.iter().zip(&self.quadrature.weights) {
            let f = v(x);
            let [gx, gy] = km1.eval_gradient(x);
            for b in 1..nkm1 {
                dofs[off_div + b - 1] -= w * (f[0] * gx[b] + f[1] * gy[b]) / area;
            }
            if np_low > 0 {
                let m = km2.eval(x);
                for r in 0..np_low {
                    let g0: f64 = (0..nkm2).map(|i| t[(r, i)] * m[i]).sum();
                    let g1: f64 = (0..nkm2).map(|i| t[(r, nk + i)] * m[i]).sum();
                    dofs[off_perp + r] += w * (f[0] * g0 + f[1] * g1) / area;
                }
            }
        }
        Ok(dofs)
    }
}
