//! H(div)-conforming mixed local space of order `k >= 0`.
//!
//! Local DOFs, in order: normal components `v . n_e` (local outward normal)
//! at the `k+1` Gauss points of each edge; scaled moments
//! `|E|^{-1} int v . grad m_b` for `b = 1 .. n_k - 1`; scaled moments
//! against the orthogonal complement `G^perp_k`.

use nalgebra::{DMatrix, DVector};

use super::common::{mass_matrix, projected_dof_stabilization, solve_dense};
use crate::error::Result;
use crate::geometry::Polygon2D;
use crate::polybasis::{build_grad_decomposition, n_nabla, n_perp, GradDecomposition, MonomialBasis};
use crate::quadrature::{gauss_segment, polygon_rule, QuadratureRule};
use crate::Point;

/// Pressure basis `P_k(E)` of the mixed pair.
pub fn pressure_basis(polygon: &Polygon2D, k: usize) -> Result<MonomialBasis> {
    MonomialBasis::new(k, polygon.centroid(), polygon.diameter())
}

#[derive(Clone, Debug)]
pub struct MccEdge {
    pub normal: [f64; 2],
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MccLocalSpace {
    pub polygon: Polygon2D,
    pub order: usize,
    pub ndof: usize,
    pub basis: MonomialBasis,
    pub quadrature: QuadratureRule,
    pub decomposition: GradDecomposition,
    pub edges: Vec<MccEdge>,
    /// Mass matrix of `P_k`.
    pub mass: DMatrix<f64>,
    /// DOFs of the vector monomials `(m_i, 0), (0, m_i)`, `Ndof x 2 n_k`.
    pub d: DMatrix<f64>,
    /// Coefficients of `div v` in `P_k`, `n_k x Ndof`.
    pub div: DMatrix<f64>,
    /// Vector L2 projection, `2 n_k x Ndof`.
    pub pi0_k: DMatrix<f64>,
}

impl MccLocalSpace {
    /// Velocity DOFs: `N_e (k+1) + n^nabla_{k-1} + n^perp_k`.
    pub fn ndof_for(num_edges: usize, k: usize) -> usize {
        num_edges * (k + 1) + n_nabla(k as i64 - 1) + n_perp(k as i64)
    }

    pub fn new(polygon: &Polygon2D, k: usize) -> Result<Self> {
        Self::with_quadrature(polygon, k, 2 * k + 2)
    }

    pub fn with_quadrature(polygon: &Polygon2D, k: usize, quadrature_order: usize) -> Result<Self> {
        let ne = polygon.num_vertices();
        let ndof = Self::ndof_for(ne, k);
        let area = polygon.area();
        let basis = pressure_basis(polygon, k)?;
        let nk = basis.len();
        let higher = basis.with_order(k + 1);
        let quadrature = polygon_rule(polygon, quadrature_order.max(2 * k + 1))?;
        let mass = mass_matrix(&quadrature, &basis, &basis);
        let decomposition = build_grad_decomposition(&basis)?;
        let n_grad = n_nabla(k as i64 - 1);
        let off_nabla = ne * (k + 1);
        let off_perp = off_nabla + n_grad;
        let np = decomposition.n_perp();

        let g = gauss_segment(k + 1)?;
        let edges: Vec<MccEdge> = polygon
            .edges()
            .iter()
            .map(|e| {
                let (points, weights) = g.on_edge(e);
                MccEdge {
                    normal: e.normal,
                    points,
                    weights,
                }
            })
            .collect();

        let mut hh = DMatrix::zeros(2 * nk, 2 * nk);
        hh.view_mut((0, 0), (nk, nk)).copy_from(&mass);
        hh.view_mut((nk, nk), (nk, nk)).copy_from(&mass);

        let mut d = DMatrix::zeros(ndof, 2 * nk);
        for (e, edge) in edges.iter().enumerate() {
            for (q, &x) in edge.points.iter().enumerate() {
                let m = basis.eval(x);
                for i in 0..nk {
                    d[(e * (k + 1) + q, i)] = m[i] * edge.normal[0];
                    d[(e * (k + 1) + q, nk + i)] = m[i] * edge.normal[1];
                }
            }
        }
        if k >= 1 {
            let der = [basis.derivative_matrix(0), basis.derivative_matrix(1)];
            let nkm1 = der[0].nrows();
            for b in 1..nk {
                for (c, dc) in der.iter().enumerate() {
                    for i in 0..nk {
                        let s: f64 = (0..nkm1).map(|r| mass[(i, r)] * dc[(r, b)]).sum();
                        d[(off_nabla + b - 1, c * nk + i)] = s / area;
                    }
                }
            }
        }
        if np > 0 {
            let dp = &decomposition.t_perp * &hh / area;
            d.rows_mut(off_perp, np).copy_from(&dp);
        }

        // Moments of the divergence against P_k by parts.
        let mut div_moments = DMatrix::zeros(nk, ndof);
        for (e, edge) in edges.iter().enumerate() {
            for (q, (&x, &w)) in edge.points.iter().zip(&edge.weights).enumerate() {
                for (b, m) in basis.eval(x).into_iter().enumerate() {
                    div_moments[(b, e * (k + 1) + q)] += w * m;
                }
            }
        }
        for b in 1..nk {
            div_moments[(b, off_nabla + b - 1)] -= area;
        }
        let div = solve_dense(mass.clone(), &div_moments, "divergence")?;

        // Moments against the gradient/complement split of [P_k]^2.
        let nn = decomposition.n_nabla();
        let mut b_t = DMatrix::zeros(2 * nk, ndof);
        let mixed = mass_matrix(&quadrature, &basis, &higher);
        for (e, edge) in edges.iter().enumerate() {
            for (q, (&x, &w)) in edge.points.iter().zip(&edge.weights).enumerate() {
                let m = higher.eval(x);
                for a in 0..nn {
                    b_t[(a, e * (k + 1) + q)] += w * m[a + 1];
                }
            }
        }
        // - int div v m^{k+1}_{a+1}
        let corr = mixed.columns(1, nn).transpose() * &div;
        b_t.rows_mut(0, nn).zip_apply(&corr, |x, c| *x -= c);
        for r in 0..np {
            b_t[(nn + r, off_perp + r)] = area;
        }
        let b_p = solve_dense(decomposition.stacked(), &b_t, "vector basis change")?;
        // Gram matrix from the DOFs (equal to `hh` in exact arithmetic), so
        // that reproduction does not degrade with the mass conditioning.
        let pi0_k = solve_dense(&b_p * &d, &b_p, "vector L2 projection")?;

        Ok(Self {
            polygon: polygon.clone(),
            order: k,
            ndof,
            basis,
            quadrature,
            decomposition,
            edges,
            mass,
            d,
            div,
            pi0_k,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Index of the first internal DOF.
    pub fn internal_offset(&self) -> usize {
        self.num_edges() * (self.order + 1)
    }

    /// `|E| (I - D Pi0)^T (I - D Pi0)`.
    pub fn stabilization(&self) -> DMatrix<f64> {
        projected_dof_stabilization(&self.d, &self.pi0_k, None) * self.polygon.area()
    }

    /// `int div(phi_j) m_b` for the pressure monomials, `n_k x Ndof`.
    pub fn divergence_matrix(&self) -> DMatrix<f64> {
        &self.mass * &self.div
    }

    /// Projected velocity basis at `points`, one matrix per component.
    pub fn basis_values_at(&self, points: &[Point]) -> Result<[DMatrix<f64>; 2]> {
        let v = self.basis.vandermonde(points)?;
        let nk = self.basis.len();
        Ok([
            &v * self.pi0_k.rows(0, nk),
            &v * self.pi0_k.rows(nk, nk),
        ])
    }

    /// Projected velocity basis at the interior quadrature points.
    pub fn basis_values(&self) -> Result<[DMatrix<f64>; 2]> {
        self.basis_values_at(&self.quadrature.points)
    }

    /// DOF vector of a smooth vector field.
    pub fn interpolate(&self, v: impl Fn(Point) -> [f64; 2]) -> DVector<f64> {
        let k = self.order;
        let nk = self.basis.len();
        let area = self.polygon.area();
        let mut dofs = DVector::zeros(self.ndof);
        for (e, edge) in self.edges.iter().enumerate() {
            for (q, &x) in edge.points.iter().enumerate() {
                let f = v(x);
                dofs[e * (k + 1) + q] = f[0] * edge.normal[0] + f[1] * edge.normal[1];
            }
        }
        let off = self.internal_offset();
        let np = self.decomposition.n_perp();
        let n_grad = nk - 1;
        for (&x, &w) in self.quadrature.points.iter().zip(&self.quadrature.weights) {
            let f = v(x);
            let wa = w / area;
            let [gx, gy] = self.basis.eval_gradient(x);
            for b in 1..nk {
                dofs[off + b - 1] += wa * (f[0] * gx[b] + f[1] * gy[b]);
            }
            if np > 0 {
                let m = self.basis.eval(x);
                for r in 0..np {
                    let t = &self.decomposition.t_perp;
                    let gp0: f64 = (0..nk).map(|i| t[(r, i)] * m[i]).sum();
                    let gp1: f64 = (0..nk).map(|i| t[(r, nk + i)] * m[i]).sum();
                    dofs[off + n_grad + r] += wa * (f[0] * gp0 + f[1] * gp1);
                }
            }
        }
        dofs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vem::test_polygons;

    fn coeffs(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 29 + 5) % 13) as f64 / 5.0 - 1.2).collect()
    }

    #[test]
    fn dof_counts() {
        let sq = &test_polygons()[0];
        assert_eq!(MccLocalSpace::new(sq, 0).unwrap().ndof, 4);
        // k = 1: 8 edge DOFs + 2 gradient + n_perp_1 = 4 - 3 + ... = 1
        assert_eq!(MccLocalSpace::new(sq, 1).unwrap().ndof, 8 + 2 + 1);
        assert_eq!(MccLocalSpace::ndof_for(5, 2), 15 + 5 + 3);
    }

    #[test]
    fn projection_and_divergence_reproduce_polynomials() {
        for poly in test_polygons() {
            for k in 0..=3 {
                let s = MccLocalSpace::new(&poly, k).unwrap();
                let nk = s.basis.len();
                let c = coeffs(2 * nk);
                let dofs = &s.d * DVector::from_column_slice(&c);
                let field = |x: Point| {
                    let m = s.basis.eval(x);
                    [
                        (0..nk).map(|i| c[i] * m[i]).sum::<f64>(),
                        (0..nk).map(|i| c[nk + i] * m[i]).sum::<f64>(),
                    ]
                };
                let interp = s.interpolate(field);
                assert!((&interp - &dofs).amax() < 1e-11, "k={k}");
                let back = &s.pi0_k * &dofs;
                for i in 0..2 * nk {
                    assert!((back[i] - c[i]).abs() < 1e-10, "k={k}");
                }
                // Divergence coefficients: sum of the derivative expansions.
                if k >= 1 {
                    let dx = s.basis.derivative_matrix(0);
                    let dy = s.basis.derivative_matrix(1);
                    let cx = DVector::from_column_slice(&c[..nk]);
                    let cy = DVector::from_column_slice(&c[nk..]);
                    let exact = dx * cx + dy * cy;
                    let got = &s.div * &dofs;
                    for i in 0..exact.len() {
                        assert!((got[i] - exact[i]).abs() < 1e-10);
                    }
                    assert!(got.rows(exact.len(), nk - exact.len()).amax() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn divergence_examples() {
        let sq = &test_polygons()[0];
        for k in 0..=2 {
            let s = MccLocalSpace::new(sq, k).unwrap();
            let c = &s.div * s.interpolate(|_| [1.0, 0.0]);
            assert!(c.amax() < 1e-12);
            let c = &s.div * s.interpolate(|x| [x[0], x[1]]);
            if k >= 1 {
                assert!((c[0] - 2.0).abs() < 1e-12);
                assert!(c.rows(1, c.len() - 1).amax() < 1e-12);
            } else {
                // The k = 0 divergence is the mean flux.
                assert!((c[0] - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotational_field_fluxes() {
        let sq = &test_polygons()[0];
        let s = MccLocalSpace::new(sq, 1).unwrap();
        let dofs = s.interpolate(|x| [x[1], -x[0]]);
        for (e, edge) in s.edges.iter().enumerate() {
            for (q, &x) in edge.points.iter().enumerate() {
                let expected = x[1] * edge.normal[0] - x[0] * edge.normal[1];
                assert!((dofs[e * 2 + q] - expected).abs() < 1e-15);
            }
        }
        // Tangential field on the bottom edge: zero flux there.
        let t = s.interpolate(|_| [1.0, 0.0]);
        assert!(t[0].abs() < 1e-15 && t[1].abs() < 1e-15);
    }

    #[test]
    fn stabilization_properties() {
        for poly in test_polygons() {
            for k in 0..=3 {
                let s = MccLocalSpace::new(&poly, k).unwrap();
                let st = s.stabilization();
                assert!((&st - st.transpose()).amax() < 1e-14);
                assert!((&st * &s.d).amax() < 1e-11);
                let rank_d = s.d.clone().singular_values().iter().filter(|&&x| x > 1e-10).count();
                let eig = st.symmetric_eigenvalues();
                assert!(eig.min() > -1e-12 * eig.max().max(1.0));
                let pos = eig.iter().filter(|&&x| x > 1e-10 * eig.max().max(1.0)).count();
                assert_eq!(pos, s.ndof - rank_d);
            }
        }
    }

    #[test]
    fn basis_values_reproduce_constants() {
        let poly = &test_polygons()[4];
        let s = MccLocalSpace::new(poly, 1).unwrap();
        let [vx, vy] = s.basis_values().unwrap();
        assert_eq!(vx.shape(), (s.quadrature.len(), s.ndof));
        let dofs = s.interpolate(|_| [0.3, -0.7]);
        assert!((&vx * &dofs).iter().all(|v| (v - 0.3).abs() < 1e-12));
        assert!((&vy * &dofs).iter().all(|v| (v + 0.7).abs() < 1e-12));
        let h = pressure_basis(poly, 2).unwrap();
        assert_eq!(h.len(), 6);
        let m = mass_matrix(&s.quadrature, &h, &h);
        assert!(m.cholesky().is_some());
    }
}
