//! H1-conforming primal local space of order `k >= 1`.
//!
//! Local DOFs, in order: vertex values (CCW), values at the `k-1` interior
//! Gauss-Lobatto nodes of each edge (edge by edge, along the CCW
//! direction), and the scaled interior moments `|E|^{-1} int v m_b` for
//! `m_b` in `P_{k-2}`.

use nalgebra::{DMatrix, DVector};

use super::common::{
    edge_traces, mass_matrix, projected_dof_stabilization, solve_dense, spectral_norm, EdgeTrace,
};
use super::{Projection, Stabilization};
use crate::error::{Result, VemError};
use crate::geometry::Polygon2D;
use crate::polybasis::{poly_dim, MonomialBasis};
use crate::quadrature::{polygon_rule, QuadratureRule};
use crate::Point;

/// DOF counts per geometric entity, shared by every cell of a mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PccReferenceElement {
    pub order: usize,
}

impl PccReferenceElement {
    pub fn new(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(VemError::Order {
                space: "primal",
                order,
                min: 1,
            });
        }
        Ok(Self { order })
    }

    pub fn dofs_per_vertex(&self) -> usize {
        1
    }

    pub fn dofs_per_edge(&self) -> usize {
        self.order - 1
    }

    pub fn dofs_per_cell(&self) -> usize {
        poly_dim(2, self.order as i64 - 2)
    }

    /// `N_v + N_e (k-1) + (k-1) k / 2`.
    pub fn ndof(&self, num_vertices: usize) -> usize {
        num_vertices * (1 + self.dofs_per_edge()) + self.dofs_per_cell()
    }

    /// Default exactness of the interior quadrature.
    pub fn quadrature_order(&self) -> usize {
        2 * self.order + 2
    }
}

/// Local space data of one polygon.
#[derive(Clone, Debug)]
pub struct PccLocalSpace {
    pub polygon: Polygon2D,
    pub order: usize,
    pub ndof: usize,
    pub basis: MonomialBasis,
    pub quadrature: QuadratureRule,
    pub edges: Vec<EdgeTrace>,
    /// DOFs of the monomials, `Ndof x n_k`.
    pub d: DMatrix<f64>,
    /// Monomial mass matrix of `P_k`.
    pub mass: DMatrix<f64>,
    /// `n_k x Ndof`.
    pub pi_nabla: DMatrix<f64>,
    /// `n_{k-2} x Ndof`.
    pub pi0_km2: DMatrix<f64>,
    /// `n_{k-1} x Ndof`.
    pub pi0_km1: DMatrix<f64>,
    /// Enhanced L2 projector, `n_k x Ndof`.
    pub pi0_k: DMatrix<f64>,
    /// `n_{k-1} x Ndof` per partial derivative.
    pub pi0_km1_grad: [DMatrix<f64>; 2],
}

impl PccLocalSpace {
    pub fn new(polygon: &Polygon2D, k: usize) -> Result<Self> {
        let reference = PccReferenceElement::new(k)?;
        Self::with_quadrature(polygon, k, reference.quadrature_order())
    }

    /// Same as [`Self::new`] with an explicit interior quadrature exactness.
    pub fn with_quadrature(polygon: &Polygon2D, k: usize, quadrature_order: usize) -> Result<Self> {
        let reference = PccReferenceElement::new(k)?;
        if quadrature_order < 2 * k {
            return Err(VemError::Quadrature(format!(
                "interior quadrature of order {quadrature_order} cannot integrate P_{k} products"
            )));
        }
        let nv = polygon.num_vertices();
        let ndof = reference.ndof(nv);
        let n_int = reference.dofs_per_cell();
        let int0 = nv * k;
        let area = polygon.area();

        let basis = MonomialBasis::new(k, polygon.centroid(), polygon.diameter())?;
        let nk = basis.len();
        let nkm1 = poly_dim(2, k as i64 - 1);
        let quadrature = polygon_rule(polygon, quadrature_order)?;
        let mass = mass_matrix(&quadrature, &basis, &basis);
        let edges = edge_traces(polygon, k, k + 2)?;
        let node_dof = |e: usize, j: usize| -> usize {
            if j == 0 {
                e
            } else if j == k {
                (e + 1) % nv
            } else {
                nv + e * (k - 1) + j - 1
            }
        };

        let mut d = DMatrix::zeros(ndof, nk);
        for (i, &v) in polygon.vertices().iter().enumerate() {
            d.row_mut(i).copy_from_slice(&basis.eval(v));
        }
        for (e, tr) in edges.iter().enumerate() {
            for (j, &x) in tr.nodes.iter().enumerate() {
                d.row_mut(node_dof(e, j + 1)).copy_from_slice(&basis.eval(x));
            }
        }
        for b in 0..n_int {
            for a in 0..nk {
                d[(int0 + b, a)] = mass[(b, a)] / area;
            }
        }

        // Right-hand side of the H1 projection.
        let lap = basis.laplacian_matrix();
        let mut b = DMatrix::zeros(nk, ndof);
        for a in 1..nk {
            for r in 0..n_int {
                b[(a, int0 + r)] -= area * lap[(r, a)];
            }
        }
        for (e, tr) in edges.iter().enumerate() {
            for (q, (&x, &w)) in tr.points.iter().zip(&tr.weights).enumerate() {
                let [gx, gy] = basis.eval_gradient(x);
                for j in 0..=k {
                    let phi = w * tr.lagrange[(q, j)];
                    let col = node_dof(e, j);
                    for a in 1..nk {
                        b[(a, col)] += phi * (gx[a] * tr.normal[0] + gy[a] * tr.normal[1]);
                    }
                    if k == 1 {
                        b[(0, col)] += phi;
                    }
                }
            }
        }
        if k >= 2 {
            b[(0, int0)] = 1.0;
        }
        let g = &b * &d;
        let pi_nabla = solve_dense(g, &b, "H1 projection")?;

        let nkm2 = n_int;
        let mut moments_low = DMatrix::zeros(nkm2, ndof);
        for r in 0..nkm2 {
            moments_low[(r, int0 + r)] = area;
        }
        let pi0_km2 = if nkm2 > 0 {
            solve_dense(
                mass.view((0, 0), (nkm2, nkm2)).into_owned(),
                &moments_low,
                "L2 projection onto P_{k-2}",
            )?
        } else {
            DMatrix::zeros(0, ndof)
        };

        // Moments int v m_b for all b: internal DOFs below degree k-1,
        // enhancement (moments of the H1 projection) above.
        let hpn = &mass * &pi_nabla;
        let mut c = hpn.clone();
        c.rows_mut(0, nkm2).copy_from(&moments_low);
        // The Gram matrix is taken from the DOFs (`C D`, equal to the mass
        // matrix in exact arithmetic) so that `Pi0_k D = I` holds to
        // round-off even where the monomial mass matrix is ill-conditioned.
        let pi0_k = solve_dense(&c * &d, &c, "L2 projection onto P_k")?;
        let pi0_km1 = solve_dense(
            mass.view((0, 0), (nkm1, nkm1)).into_owned(),
            &c.rows(0, nkm1).into_owned(),
            "L2 projection onto P_{k-1}",
        )?;

        // Gradient projection by parts.
        let lower = basis.with_order(k - 1);
        let mut pi0_km1_grad = [DMatrix::zeros(nkm1, ndof), DMatrix::zeros(nkm1, ndof)];
        for (dir, target) in pi0_km1_grad.iter_mut().enumerate() {
            let der = lower.derivative_matrix(dir);
            let mut rhs = DMatrix::zeros(nkm1, ndof);
            for bta in 0..nkm1 {
                for r in 0..nkm2 {
                    rhs[(bta, int0 + r)] -= area * der[(r, bta)];
                }
            }
            for (e, tr) in edges.iter().enumerate() {
                for (q, (&x, &w)) in tr.points.iter().zip(&tr.weights).enumerate() {
                    let m = lower.eval(x);
                    for j in 0..=k {
                        let phi = w * tr.lagrange[(q, j)] * tr.normal[dir];
                        let col = node_dof(e, j);
                        for bta in 0..nkm1 {
                            rhs[(bta, col)] += phi * m[bta];
                        }
                    }
                }
            }
            *target = solve_dense(
                mass.view((0, 0), (nkm1, nkm1)).into_owned(),
                &rhs,
                "gradient projection",
            )?;
        }

        Ok(Self {
            polygon: polygon.clone(),
            order: k,
            ndof,
            basis,
            quadrature,
            edges,
            d,
            mass,
            pi_nabla,
            pi0_km2,
            pi0_km1,
            pi0_k,
            pi0_km1_grad,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.polygon.num_vertices()
    }

    /// Index of the first internal DOF.
    pub fn internal_offset(&self) -> usize {
        self.num_vertices() * self.order
    }

    /// Local DOF of trace node `j` (0 = start vertex, `k` = end vertex) of
    /// local edge `e`.
    pub fn edge_node_dof(&self, e: usize, j: usize) -> usize {
        let (k, nv) = (self.order, self.num_vertices());
        if j == 0 {
            e
        } else if j == k {
            (e + 1) % nv
        } else {
            nv + e * (k - 1) + j - 1
        }
    }

    /// Positions of the edge DOFs of local edge `e`, in CCW order.
    pub fn edge_dof_points(&self, e: usize) -> &[Point] {
        &self.edges[e].nodes
    }

    /// Coefficient matrix of the requested projection.
    pub fn projector(&self, projection: Projection) -> &DMatrix<f64> {
        match projection {
            Projection::PiNabla => &self.pi_nabla,
            Projection::Pi0k => &self.pi0_k,
            Projection::Pi0km1 => &self.pi0_km1,
        }
    }

    fn projection_basis(&self, projection: Projection) -> MonomialBasis {
        match projection {
            Projection::Pi0km1 => self.basis.with_order(self.order - 1),
            _ => self.basis.clone(),
        }
    }

    /// `(q, j)` entry: projected basis function `j` at `points[q]`.
    pub fn basis_values_at(&self, projection: Projection, points: &[Point]) -> Result<DMatrix<f64>> {
        Ok(self.projection_basis(projection).vandermonde(points)? * self.projector(projection))
    }

    /// Projected basis functions at the interior quadrature points.
    pub fn basis_function_values(&self, projection: Projection) -> Result<DMatrix<f64>> {
        self.basis_values_at(projection, &self.quadrature.points)
    }

    /// Gradient projections of the basis functions at `points`.
    pub fn derivative_values_at(&self, points: &[Point]) -> Result<[DMatrix<f64>; 2]> {
        let v = self.basis.with_order(self.order - 1).vandermonde(points)?;
        Ok([&v * &self.pi0_km1_grad[0], &v * &self.pi0_km1_grad[1]])
    }

    /// Gradient projections at the interior quadrature points.
    pub fn basis_function_derivative_values(&self) -> Result<[DMatrix<f64>; 2]> {
        self.derivative_values_at(&self.quadrature.points)
    }

    /// `int grad_proj(phi_i) . grad_proj(phi_j)` with unit diffusion.
    pub fn consistency_matrix(&self) -> DMatrix<f64> {
        let n = self.pi0_km1.nrows();
        let h = self.mass.view((0, 0), (n, n));
        let [px, py] = &self.pi0_km1_grad;
        px.transpose() * h * px + py.transpose() * h * py
    }

    /// Stabilization with unit coefficient (for `DofiDofi`, the caller
    /// applies the diffusion scaling).
    pub fn stabilization(&self, recipe: Stabilization) -> DMatrix<f64> {
        match recipe {
            Stabilization::DofiDofi => projected_dof_stabilization(&self.d, &self.pi_nabla, None),
            Stabilization::DRecipe => {
                let w = d_recipe_weights(&self.consistency_matrix());
                projected_dof_stabilization(&self.d, &self.pi_nabla, Some(&w))
            }
        }
    }

    /// Stabilization weighted by the diagonal of a given consistency matrix.
    pub fn d_recipe_stabilization(&self, consistency: &DMatrix<f64>) -> DMatrix<f64> {
        let w = d_recipe_weights(consistency);
        projected_dof_stabilization(&self.d, &self.pi_nabla, Some(&w))
    }

    /// Spectral norm of a diffusion tensor, used as dofi-dofi premultiplier.
    pub fn diffusion_scale(tensor: [[f64; 2]; 2]) -> f64 {
        spectral_norm(&DMatrix::from_row_slice(
            2,
            2,
            &[tensor[0][0], tensor[0][1], tensor[1][0], tensor[1][1]],
        ))
    }

    /// DOF vector of a smooth function.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> DVector<f64> {
        let nv = self.num_vertices();
        let mut dofs = DVector::zeros(self.ndof);
        for (i, &v) in self.polygon.vertices().iter().enumerate() {
            dofs[i] = f(v);
        }
        for (e, tr) in self.edges.iter().enumerate() {
            for (j, &x) in tr.nodes.iter().enumerate() {
                dofs[nv + e * (self.order - 1) + j] = f(x);
            }
        }
        let n_int = poly_dim(2, self.order as i64 - 2);
        if n_int > 0 {
            let low = self.basis.with_order(self.order - 2);
            let off = self.internal_offset();
            let area = self.polygon.area();
            for (&x, &w) in self.quadrature.points.iter().zip(&self.quadrature.weights) {
                let fx = w * f(x) / area;
                for (b, m) in low.eval(x).into_iter().enumerate() {
                    dofs[off + b] += fx * m;
                }
            }
        }
        dofs
    }
}

/// `max(1, K_ii)` for every DOF.
pub fn d_recipe_weights(consistency: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        consistency.nrows(),
        (0..consistency.nrows()).map(|i| consistency[(i, i)].max(1.0)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vem::test_polygons;

    fn poly_dofs(space: &PccLocalSpace, coeffs: &[f64]) -> DVector<f64> {
        &space.d * DVector::from_column_slice(coeffs)
    }

    fn sample_coeffs(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 37 + 11) % 17) as f64 / 7.0 - 1.0).collect()
    }

    #[test]
    fn dof_count_examples() {
        let sq = &test_polygons()[0];
        assert_eq!(PccLocalSpace::new(sq, 3).unwrap().ndof, 15);
        assert_eq!(PccLocalSpace::new(sq, 1).unwrap().ndof, 4);
        assert!(matches!(PccLocalSpace::new(sq, 0), Err(VemError::Order { .. })));
        for k in 1..=4 {
            let r = PccReferenceElement::new(k).unwrap();
            assert_eq!(r.ndof(7), 7 + 7 * (k - 1) + (k - 1) * k / 2);
        }
    }

    #[test]
    fn projectors_reproduce_polynomials() {
        for poly in test_polygons() {
            for k in 1..=4 {
                let s = PccLocalSpace::new(&poly, k).unwrap();
                let c = sample_coeffs(s.basis.len());
                let dofs = poly_dofs(&s, &c);
                // Also through the interpolation of the evaluated polynomial.
                let interp = s.interpolate(|x| s.basis.eval_combination(&c, x));
                assert!((&interp - &dofs).amax() < 1e-12);
                for p in [&s.pi_nabla, &s.pi0_k] {
                    let back = p * &dofs;
                    for i in 0..c.len() {
                        assert!((back[i] - c[i]).abs() < 1e-10, "k={k}: {back} vs {c:?}");
                    }
                }
                let low = s.pi0_km1.nrows();
                let back = &s.pi0_km1 * &dofs;
                let full = s.mass.view((0, 0), (low, low)).lu().solve(
                    &(s.mass.rows(0, low) * DVector::from_column_slice(&c)),
                );
                assert!((back - full.unwrap()).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn gradient_projection_of_polynomials() {
        for poly in test_polygons() {
            for k in 1..=4 {
                let s = PccLocalSpace::new(&poly, k).unwrap();
                let c = sample_coeffs(s.basis.len());
                let dofs = poly_dofs(&s, &c);
                let [dx, dy] = s.derivative_values_at(&s.quadrature.points).unwrap();
                let gx = &dx * &dofs;
                let gy = &dy * &dofs;
                for (q, &x) in s.quadrature.points.iter().enumerate() {
                    let [ex, ey] = s.basis.eval_gradient(x);
                    let ex: f64 = ex.iter().zip(&c).map(|(a, b)| a * b).sum();
                    let ey: f64 = ey.iter().zip(&c).map(|(a, b)| a * b).sum();
                    assert!((gx[q] - ex).abs() < 1e-9 * (1.0 + ex.abs()));
                    assert!((gy[q] - ey).abs() < 1e-9 * (1.0 + ey.abs()));
                }
            }
        }
    }

    #[test]
    fn constants_and_linears() {
        let poly = &test_polygons()[2];
        for k in 1..=3 {
            let s = PccLocalSpace::new(poly, k).unwrap();
            let one = s.interpolate(|_| 1.0);
            let p = &s.pi0_k * &one;
            assert!((p[0] - 1.0).abs() < 1e-12 && p.rows(1, p.len() - 1).amax() < 1e-12);
            assert!((&s.pi0_km1_grad[0] * &one).amax() < 1e-12);
            assert!((&s.pi0_km1_grad[1] * &one).amax() < 1e-12);
            let x = s.interpolate(|x| x[0]);
            let [dx, dy] = s.basis_function_derivative_values().unwrap();
            assert!((&dx * &x).iter().all(|v| (v - 1.0).abs() < 1e-12));
            assert!((&dy * &x).amax() < 1e-12);
            // Projections of the constant interpolant are 1 everywhere; for
            // k <= 2 this is the partition of unity of the basis.
            for proj in [Projection::PiNabla, Projection::Pi0k] {
                let v = s.basis_function_values(proj).unwrap();
                assert_eq!(v.shape(), (s.quadrature.len(), s.ndof));
                assert!((&v * &one).iter().all(|x| (x - 1.0).abs() < 1e-12));
                if k <= 2 {
                    for row in v.row_iter() {
                        assert!((row.sum() - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences_on_polynomials() {
        let poly = &test_polygons()[1];
        let s = PccLocalSpace::new(poly, 3).unwrap();
        let c = sample_coeffs(s.basis.len());
        let dofs = poly_dofs(&s, &c);
        let eps = 1e-6;
        let x = s.polygon.centroid();
        let val = |p: Point| {
            (s.basis_values_at(Projection::PiNabla, &[p]).unwrap() * &dofs)[0]
        };
        let fd = (val([x[0] + eps, x[1]]) - val([x[0] - eps, x[1]])) / (2.0 * eps);
        let [dx, _] = s.derivative_values_at(&[x]).unwrap();
        assert!((fd - (dx * &dofs)[0]).abs() < 1e-7);
    }

    #[test]
    fn stabilization_properties() {
        for poly in test_polygons() {
            for k in 1..=4 {
                let s = PccLocalSpace::new(&poly, k).unwrap();
                for recipe in [Stabilization::DofiDofi, Stabilization::DRecipe] {
                    let st = s.stabilization(recipe);
                    assert!((&st - st.transpose()).amax() < 1e-14 * (1.0 + st.amax()));
                    assert!((&st * &s.d).amax() < 1e-11 * (1.0 + st.amax()));
                    let eig = st.clone().symmetric_eigenvalues();
                    assert!(eig.min() > -1e-12 * eig.max().max(1.0));
                    // Rank oracle: SVD of the projector complement.
                    let r = DMatrix::<f64>::identity(s.ndof, s.ndof) - &s.d * &s.pi_nabla;
                    let sv = r.singular_values();
                    let rank_r = sv.iter().filter(|&&x| x > 1e-10).count();
                    assert_eq!(rank_r, s.ndof - s.basis.len());
                    let pos = eig.iter().filter(|&&x| x > 1e-10 * eig.max().max(1.0)).count();
                    assert_eq!(pos, s.ndof - s.basis.len());
                }
            }
        }
    }

    #[test]
    fn enhancement_moments_match_h1_projection() {
        for poly in test_polygons() {
            for k in 1..=4 {
                let s = PccLocalSpace::new(&poly, k).unwrap();
                let lhs = &s.mass * &s.pi0_k;
                let rhs = &s.mass * &s.pi_nabla;
                let lo = poly_dim(2, k as i64 - 2);
                let diff = (lhs.rows(lo, s.basis.len() - lo) - rhs.rows(lo, s.basis.len() - lo)).amax();
                assert!(diff < 1e-11, "k={k}: {diff}");
            }
        }
    }

    #[test]
    fn interpolation_samples_vertices() {
        let poly = &test_polygons()[0];
        let s = PccLocalSpace::new(poly, 2).unwrap();
        let f = |x: Point| (std::f64::consts::PI * x[0]).sin();
        let dofs = s.interpolate(f);
        for (i, &v) in poly.vertices().iter().enumerate() {
            assert_eq!(dofs[i], f(v));
        }
        let one = s.interpolate(|_| 1.0);
        assert!((one[s.internal_offset()] - 1.0).abs() < 1e-14);
    }
}
