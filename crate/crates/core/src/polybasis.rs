//! Scaled monomials, their Vandermonde matrices, and the gradient /
//! orthogonal-complement decomposition of vector polynomial spaces.
//!
//! Monomials are enumerated shell by shell in total degree. Inside a shell
//! of degree `s` the 2D order is `(s,0), (s-1,1), ..., (0,s)`, so that
//! `(0,0) -> 1, (1,0) -> 2, (0,1) -> 3, (2,0) -> 4, ...`. Because the
//! enumeration is hierarchical, the first `n_j` entries of an order-`k`
//! basis always form the order-`j` basis.

use nalgebra::{DMatrix, SVD};

use crate::error::{Result, VemError};
use crate::Point;

/// Dimension of the polynomial space of total degree `k` in `d` variables.
///
/// Returns 0 for `k = -1` (and any negative order).
pub fn poly_dim(d: usize, k: i64) -> usize {
    if k < 0 {
        return 0;
    }
    let k = k as usize;
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 1..=d {
        num *= k + i;
        den *= i;
    }
    num / den
}

/// 1-based position of a multi-index in the shell-by-shell enumeration.
///
/// Supports `d = 1` and `d = 2`.
pub fn monomial_index(multi_index: &[usize]) -> usize {
    match multi_index {
        [a] => a + 1,
        [a, b] => {
            let s = a + b;
            s * (s + 1) / 2 + b + 1
        }
        _ => panic!("monomial_index supports dimensions 1 and 2"),
    }
}

/// Inverse of [`monomial_index`]: multi-index at a 1-based position.
pub fn monomial_exponents(d: usize, index: usize) -> Vec<usize> {
    assert!(index >= 1, "monomial indices are 1-based");
    let i0 = index - 1;
    match d {
        1 => vec![i0],
        2 => {
            let mut s = 0;
            while (s + 1) * (s + 2) / 2 <= i0 {
                s += 1;
            }
            let b = i0 - s * (s + 1) / 2;
            vec![s - b, b]
        }
        _ => panic!("monomial_exponents supports dimensions 1 and 2"),
    }
}

#[inline]
fn index2(a: usize, b: usize) -> usize {
    let s = a + b;
    s * (s + 1) / 2 + b
}

/// Scaled monomials `((x - x_E) / h_E)^alpha` of total degree at most `order`.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    dim: usize,
    order: usize,
    centroid: Point,
    diameter: f64,
    exponents: Vec<[usize; 2]>,
}

impl MonomialBasis {
    pub fn new(order: usize, centroid: Point, diameter: f64) -> Result<Self> {
        Self::with_dim(2, order, centroid, diameter)
    }

    /// One-dimensional scaled monomials; only the first coordinate of
    /// points and centroid is used.
    pub fn new_1d(order: usize, center: f64, length: f64) -> Result<Self> {
        Self::with_dim(1, order, [center, 0.0], length)
    }

    fn with_dim(dim: usize, order: usize, centroid: Point, diameter: f64) -> Result<Self> {
        if !(diameter > 0.0) || !diameter.is_finite() {
            return Err(VemError::InvalidPolygon(format!(
                "monomial scaling length must be positive, got {diameter}"
            )));
        }
        let n = poly_dim(dim, order as i64);
        let exponents = (1..=n)
            .map(|i| {
                let e = monomial_exponents(dim, i);
                if dim == 1 {
                    [e[0], 0]
                } else {
                    [e[0], e[1]]
                }
            })
            .collect();
        Ok(Self {
            dim,
            order,
            centroid,
            diameter,
            exponents,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn centroid(&self) -> Point {
        self.centroid
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[[usize; 2]] {
        &self.exponents
    }

    /// Same centroid and scaling, different order.
    pub fn with_order(&self, order: usize) -> Self {
        Self::with_dim(self.dim, order, self.centroid, self.diameter)
            .expect("scaling already validated")
    }

    fn scaled(&self, x: Point) -> [f64; 2] {
        let sx = (x[0] - self.centroid[0]) / self.diameter;
        let sy = if self.dim == 2 {
            (x[1] - self.centroid[1]) / self.diameter
        } else {
            0.0
        };
        [sx, sy]
    }

    fn powers(&self, x: Point) -> [Vec<f64>; 2] {
        let s = self.scaled(x);
        let mut px = vec![1.0; self.order + 1];
        let mut py = vec![1.0; self.order + 1];
        for i in 1..=self.order {
            px[i] = px[i - 1] * s[0];
            py[i] = py[i - 1] * s[1];
        }
        [px, py]
    }

    /// Values of every monomial at `x`.
    pub fn eval(&self, x: Point) -> Vec<f64> {
        let [px, py] = self.powers(x);
        self.exponents.iter().map(|&[a, b]| px[a] * py[b]).collect()
    }

    /// Values of `sum_j coeffs[j] m_j` at `x`.
    pub fn eval_combination(&self, coeffs: &[f64], x: Point) -> f64 {
        self.eval(x)
            .iter()
            .zip(coeffs)
            .map(|(m, c)| m * c)
            .sum()
    }

    /// Gradient of every monomial at `x`: `(d/dx, d/dy)`.
    pub fn eval_gradient(&self, x: Point) -> [Vec<f64>; 2] {
        let [px, py] = self.powers(x);
        let h = self.diameter;
        let dx = self
            .exponents
            .iter()
            .map(|&[a, b]| if a == 0 { 0.0 } else { a as f64 * px[a - 1] * py[b] / h })
            .collect();
        let dy = self
            .exponents
            .iter()
            .map(|&[a, b]| if b == 0 { 0.0 } else { b as f64 * px[a] * py[b - 1] / h })
            .collect();
        [dx, dy]
    }

    fn check_points(points: &[Point]) -> Result<()> {
        if points.is_empty() {
            return Err(VemError::Dimension("empty point list for Vandermonde matrix".into()));
        }
        Ok(())
    }

    /// `V[(i, j)] = m_j(points[i])`.
    pub fn vandermonde(&self, points: &[Point]) -> Result<DMatrix<f64>> {
        Self::check_points(points)?;
        let mut v = DMatrix::zeros(points.len(), self.len());
        for (i, &x) in points.iter().enumerate() {
            for (j, m) in self.eval(x).into_iter().enumerate() {
                v[(i, j)] = m;
            }
        }
        Ok(v)
    }

    /// Vandermonde matrices of the partial derivatives.
    pub fn vandermonde_gradient(&self, points: &[Point]) -> Result<[DMatrix<f64>; 2]> {
        Self::check_points(points)?;
        let mut vx = DMatrix::zeros(points.len(), self.len());
        let mut vy = DMatrix::zeros(points.len(), self.len());
        for (i, &x) in points.iter().enumerate() {
            let [dx, dy] = self.eval_gradient(x);
            for j in 0..self.len() {
                vx[(i, j)] = dx[j];
                vy[(i, j)] = dy[j];
            }
        }
        Ok([vx, vy])
    }

    /// Vandermonde matrix of the Laplacian.
    pub fn vandermonde_laplacian(&self, points: &[Point]) -> Result<DMatrix<f64>> {
        Self::check_points(points)?;
        let lap = self.laplacian_matrix();
        let lower = self.with_order(self.order.saturating_sub(2));
        let mut v = DMatrix::zeros(points.len(), self.len());
        if self.order < 2 {
            return Ok(v);
        }
        for (i, &x) in points.iter().enumerate() {
            let m = lower.eval(x);
            for j in 0..self.len() {
                v[(i, j)] = (0..lower.len()).map(|r| lap[(r, j)] * m[r]).sum();
            }
        }
        Ok(v)
    }

    /// Coefficients of `d m_alpha / d x_dir` in the order `k-1` basis:
    /// column `alpha` holds the expansion of the derivative of `m_alpha`.
    /// Shape `n_{k-1} x n_k` (zero rows when `k = 0`).
    pub fn derivative_matrix(&self, dir: usize) -> DMatrix<f64> {
        let rows = poly_dim(self.dim, self.order as i64 - 1);
        let mut d = DMatrix::zeros(rows, self.len());
        for (j, &[a, b]) in self.exponents.iter().enumerate() {
            match dir {
                0 if a > 0 => {
                    let r = if self.dim == 1 { a - 1 } else { index2(a - 1, b) };
                    d[(r, j)] = a as f64 / self.diameter;
                }
                1 if b > 0 => d[(index2(a, b - 1), j)] = b as f64 / self.diameter,
                _ => {}
            }
        }
        d
    }

    /// Coefficients of `Laplacian(m_alpha)` in the order `k-2` basis,
    /// shape `n_{k-2} x n_k`.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let rows = poly_dim(self.dim, self.order as i64 - 2);
        let h2 = self.diameter * self.diameter;
        let mut l = DMatrix::zeros(rows, self.len());
        for (j, &[a, b]) in self.exponents.iter().enumerate() {
            if a >= 2 {
                let r = if self.dim == 1 { a - 2 } else { index2(a - 2, b) };
                l[(r, j)] += (a * (a - 1)) as f64 / h2;
            }
            if b >= 2 {
                l[(index2(a, b - 2), j)] += (b * (b - 1)) as f64 / h2;
            }
        }
        l
    }
}

/// Splitting of `[P_k]^2` into gradients `G^nabla_k = grad P_{k+1}` and the
/// Euclidean-orthogonal complement `G^perp_k`, both expressed in the vector
/// basis `(m_1,0), ..., (m_n,0), (0,m_1), ..., (0,m_n)`.
#[derive(Clone, Debug)]
pub struct GradDecomposition {
    pub order: usize,
    /// `n^nabla_k x 2 n_k`; row `alpha` expands `grad m^{k+1}_{alpha+1}`.
    pub t_nabla: DMatrix<f64>,
    /// `n^perp_k x 2 n_k`; orthonormal rows spanning the nullspace of `t_nabla`.
    pub t_perp: DMatrix<f64>,
}

impl GradDecomposition {
    pub fn n_nabla(&self) -> usize {
        self.t_nabla.nrows()
    }

    pub fn n_perp(&self) -> usize {
        self.t_perp.nrows()
    }

    /// Square change of basis `[t_nabla; t_perp]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let n = self.t_nabla.ncols();
        let mut t = DMatrix::zeros(n, n);
        t.rows_mut(0, self.n_nabla()).copy_from(&self.t_nabla);
        t.rows_mut(self.n_nabla(), self.n_perp()).copy_from(&self.t_perp);
        t
    }
}

/// `n^nabla_k = n_{k+1} - 1`.
pub fn n_nabla(k: i64) -> usize {
    if k < 0 {
        0
    } else {
        poly_dim(2, k + 1) - 1
    }
}

/// `n^perp_k = 2 n_k - n^nabla_k`.
pub fn n_perp(k: i64) -> usize {
    if k < 0 {
        0
    } else {
        2 * poly_dim(2, k) - n_nabla(k)
    }
}

/// Builds `T^nabla` analytically and `T^perp` from the trailing right
/// singular vectors of `T^nabla`.
///
/// `T^nabla` is block diagonal by degree shell (gradients of degree-`s+1`
/// monomials only involve degree-`s` coefficients), so the SVD is taken
/// shell by shell. The rows of `T^perp` are therefore grouped by degree,
/// and the first `n^perp_j` rows of the order-`k` complement span the
/// order-`j` complement for every `j <= k`.
pub fn build_grad_decomposition(basis: &MonomialBasis) -> Result<GradDecomposition> {
    if basis.dim() != 2 {
        return Err(VemError::Dimension(
            "gradient decomposition is only defined for planar bases".into(),
        ));
    }
    let k = basis.order();
    let nk = basis.len();
    let higher = basis.with_order(k + 1);
    let nn = higher.len() - 1;
    let dx = higher.derivative_matrix(0);
    let dy = higher.derivative_matrix(1);
    let mut t_nabla = DMatrix::zeros(nn, 2 * nk);
    for alpha in 0..nn {
        for i in 0..nk {
            t_nabla[(alpha, i)] = dx[(i, alpha + 1)];
            t_nabla[(alpha, nk + i)] = dy[(i, alpha + 1)];
        }
    }

    let mut t_perp = DMatrix::zeros(2 * nk - nn, 2 * nk);
    let mut row = 0;
    for s in 0..=k {
        // Coefficient range of the degree-s shell and gradient rows of degree s+1.
        let c0 = s * (s + 1) / 2;
        let cn = s + 1;
        let r0 = (s + 1) * (s + 2) / 2 - 1;
        let rn = s + 2;
        let cols: Vec<usize> = (c0..c0 + cn).chain(nk + c0..nk + c0 + cn).collect();
        // Zero-padded to square so that the full right singular basis is formed.
        let n = 2 * cn;
        let mut block = DMatrix::zeros(n, n);
        for r in 0..rn {
            for (j, &c) in cols.iter().enumerate() {
                block[(r, j)] = t_nabla[(r0 + r, c)];
            }
        }
        let svd = SVD::new(block, false, true);
        let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&x| x > 1e-12 * sigma_max)
            .count();
        if rank != rn {
            return Err(VemError::RankMismatch {
                expected: rn,
                found: rank,
            });
        }
        let v_t = svd.v_t.expect("right singular vectors requested");
        for q in rn..n {
            for (j, &c) in cols.iter().enumerate() {
                t_perp[(row, c)] = v_t[(q, j)];
            }
            row += 1;
        }
    }
    debug_assert_eq!(row, t_perp.nrows());
    Ok(GradDecomposition {
        order: k,
        t_nabla,
        t_perp,
    })
}
