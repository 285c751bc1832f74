//! Sparse global systems and direct solves.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Result, VemError};

/// Compressed sparse row matrix with summed duplicates and sorted columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; dim + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[s.clone()].iter().copied().zip(self.values[s].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let s = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[s.clone()].binary_search(&c) {
            Ok(i) => self.values[s.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.dim)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }
}

/// Square system under assembly: matrix triplets plus right-hand side.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    dim: usize,
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            triplets: Vec::new(),
            rhs: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.dim && col < self.dim, "entry ({row}, {col}) outside {}", self.dim);
        if value != 0.0 {
            self.triplets.push((row, col, value));
        }
    }

    pub fn add_rhs(&mut self, row: usize, value: f64) {
        self.rhs[row] += value;
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn matrix(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.dim, &self.triplets)
    }
}

/// Relative residual bound `||Ax - b||_inf <= tol (||A||_inf ||x||_inf + ||b||_inf)`.
pub fn residual_check(a: &CsrMatrix, x: &[f64], b: &[f64], tol: f64) -> Result<f64> {
    let ax = a.mul_vec(x);
    let inf = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let r = ax.iter().zip(b).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
    let bound = tol * (a.norm_inf() * inf(x) + inf(b));
    if !(r <= bound) || x.iter().any(|v| !v.is_finite()) {
        return Err(VemError::Residual { residual: r, bound });
    }
    Ok(r)
}

pub trait SparseSolver {
    fn solve(&self, system: &LinearSystem) -> Result<Vec<f64>>;
}

/// Sparse LU with iterative refinement and an a posteriori residual check.
#[derive(Clone, Copy, Debug)]
pub struct DirectSolver {
    pub residual_tolerance: f64,
    /// Maximum refinement sweeps `x += A^{-1} (b - A x)`; a sweep is kept
    /// only if it lowers the componentwise backward error.
    pub refinement_steps: usize,
}

impl Default for DirectSolver {
    fn default() -> Self {
        Self {
            residual_tolerance: 1e-9,
            refinement_steps: 10,
        }
    }
}

fn residual_vector(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

type SparseLu = faer::sparse::linalg::solvers::Lu<usize, f64>;

fn sparse_lu(n: usize, entries: &[Triplet<usize, usize, f64>]) -> Result<SparseLu> {
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, entries)
        .map_err(|e| VemError::SingularSystem(format!("matrix creation failed: {e:?}")))?;
    m.sp_lu()
        .map_err(|e| VemError::SingularSystem(format!("factorization failed: {e:?}")))
}

fn lu_apply(lu: &SparseLu, rhs: &[f64]) -> Vec<f64> {
    let mut x = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    lu.solve_in_place(x.as_mut());
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}

/// Largest number of dense rows handled by a low-rank correction.
const MAX_DENSE: usize = 8;

/// Indices whose row or column holds more than `max(64, 10 sqrt(n))` entries,
/// such as global constraint rows.
fn dense_indices(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim;
    let limit = 64.max((10.0 * (n as f64).sqrt()) as usize);
    let mut col_count = vec![0usize; n];
    for &c in &a.col_idx {
        col_count[c] += 1;
    }
    (0..n)
        .filter(|&i| a.row_ptr[i + 1] - a.row_ptr[i] > limit || col_count[i] > limit)
        .collect()
}

/// Sparse LU of the matrix with its dense rows and columns cut down to one
/// off-diagonal entry each, corrected by the Woodbury identity.
///
/// A dense row makes the fill-reducing column ordering see a dense block in
/// `A^T A` (one zero-mean constraint couples every pressure unknown), which
/// turns the sparse factorization into a dense one. With `A = A0 + U V^T`,
/// `A^{-1} b = y - Z (I + V^T Z)^{-1} V^T y` where `y = A0^{-1} b`,
/// `Z = A0^{-1} U`.
struct BorderedLu {
    core: SparseLu,
    v: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    capacitance: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl BorderedLu {
    fn new(a: &CsrMatrix, dense: &[usize]) -> Result<Self> {
        let n = a.dim;
        let is_dense = |i: usize| dense.binary_search(&i).is_ok();
        // Kept off-diagonal entry of each dense row and column: the largest.
        let mut keep_row = vec![None::<(usize, f64)>; dense.len()];
        let mut keep_col = vec![None::<(usize, f64)>; dense.len()];
        for r in 0..n {
            for (c, v) in a.row(r) {
                if r == c {
                    continue;
                }
                if let Ok(d) = dense.binary_search(&r) {
                    if keep_row[d].is_none_or(|(_, w)| v.abs() > w.abs()) {
                        keep_row[d] = Some((c, v));
                    }
                } else if let Ok(d) = dense.binary_search(&c) {
                    if keep_col[d].is_none_or(|(_, w)| v.abs() > w.abs()) {
                        keep_col[d] = Some((r, v));
                    }
                }
            }
        }
        let mut u: Vec<Vec<f64>> = Vec::with_capacity(2 * dense.len());
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(2 * dense.len());
        let mut row_rest = vec![vec![0.0; n]; dense.len()];
        let mut col_rest = vec![vec![0.0; n]; dense.len()];
        let mut entries = Vec::with_capacity(a.nnz());
        for r in 0..n {
            for (c, val) in a.row(r) {
                if r != c && is_dense(r) {
                    let d = dense.binary_search(&r).expect("dense row");
                    if keep_row[d].map(|(k, _)| k) != Some(c) {
                        row_rest[d][c] = val;
                        continue;
                    }
                } else if r != c && is_dense(c) {
                    let d = dense.binary_search(&c).expect("dense column");
                    if keep_col[d].map(|(k, _)| k) != Some(r) {
                        col_rest[d][r] = val;
                        continue;
                    }
                }
                entries.push(Triplet::new(r, c, val));
            }
        }
        for (d, &i) in dense.iter().enumerate() {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            // e_i r^T
            u.push(e.clone());
            v.push(std::mem::take(&mut row_rest[d]));
            // s e_i^T
            u.push(std::mem::take(&mut col_rest[d]));
            v.push(e);
        }
        let core = sparse_lu(n, &entries)?;
        let z: Vec<Vec<f64>> = u.iter().map(|col| lu_apply(&core, col)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let k = u.len();
        let cap = nalgebra::DMatrix::from_fn(k, k, |i, j| f64::from(i == j) + dot(&v[i], &z[j]));
        if cap.iter().any(|x| !x.is_finite()) {
            return Err(VemError::SingularSystem("singular core factorization".into()));
        }
        Ok(Self {
            core,
            v,
            z,
            capacitance: cap.lu(),
        })
    }

    fn apply(&self, rhs: &[f64]) -> Vec<f64> {
        let mut y = lu_apply(&self.core, rhs);
        let vy = nalgebra::DVector::from_iterator(
            self.v.len(),
            self.v.iter().map(|v| v.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()),
        );
        if let Some(w) = self.capacitance.solve(&vy) {
            for (zj, wj) in self.z.iter().zip(w.iter()) {
                for (yi, zi) in y.iter_mut().zip(zj) {
                    *yi -= zi * wj;
                }
            }
        } else {
            y.iter_mut().for_each(|x| *x = f64::NAN);
        }
        y
    }
}

impl DirectSolver {
    /// Solution by `apply` (an approximate inverse) with iterative refinement
    /// and the residual check.
    ///
    /// Sweeps continue while the componentwise backward error
    /// `max_i |r_i| / (|A| |x| + |b|)_i` halves, so that rows with small
    /// entries (constraints) are resolved to their own scale.
    fn refine(&self, a: &CsrMatrix, b: &[f64], apply: impl Fn(&[f64]) -> Vec<f64>) -> Result<Vec<f64>> {
        let backward_error = |x: &[f64], r: &[f64]| {
            (0..a.dim).fold(0.0f64, |m, i| {
                let scale: f64 = a.row(i).map(|(c, v)| (v * x[c]).abs()).sum::<f64>() + b[i].abs();
                if scale > 0.0 {
                    m.max(r[i].abs() / scale)
                } else if r[i] != 0.0 {
                    f64::INFINITY
                } else {
                    m
                }
            })
        };
        let mut x = apply(b);
        let mut r = residual_vector(a, &x, b);
        let mut berr = backward_error(&x, &r);
        for _ in 0..self.refinement_steps {
            if !(berr > f64::EPSILON) {
                break;
            }
            let d = apply(&r);
            let candidate: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + di).collect();
            let r_new = residual_vector(a, &candidate, b);
            let berr_new = backward_error(&candidate, &r_new);
            if !(berr_new < berr) {
                break;
            }
            let halved = berr_new <= 0.5 * berr;
            x = candidate;
            r = r_new;
            berr = berr_new;
            if !halved {
                break;
            }
        }
        residual_check(a, &x, b, self.residual_tolerance).map_err(|e| match e {
            VemError::Residual { residual, bound } if !residual.is_finite() || residual > 1e3 * bound => {
                VemError::SingularSystem(format!("residual {residual:e} exceeds {bound:e}"))
            }
            other => other,
        })?;
        Ok(x)
    }
}

impl SparseSolver for DirectSolver {
    fn solve(&self, system: &LinearSystem) -> Result<Vec<f64>> {
        let n = system.dim();
        if n == 0 {
            return Ok(Vec::new());
        }
        let a = system.matrix();
        let b = system.rhs();
        let dense = dense_indices(&a);
        if !dense.is_empty() && dense.len() <= MAX_DENSE {
            // Falls through to the plain factorization if the cut-down core
            // happens to be singular.
            if let Ok(x) = BorderedLu::new(&a, &dense).and_then(|f| self.refine(&a, b, |r| f.apply(r))) {
                return Ok(x);
            }
        }
        let entries: Vec<_> = (0..n)
            .flat_map(|r| a.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
            .collect();
        let lu = sparse_lu(n, &entries)?;
        self.refine(&a, b, |r| lu_apply(&lu, r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_sums_duplicates() {
        let a = CsrMatrix::from_triplets(2, &[(1, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (0, 0, 1.0)]);
        assert_eq!(a.row_ptr, vec![0, 2, 3]);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.norm_inf(), 4.0);
        assert_eq!(a.max_asymmetry(), 2.0);
    }

    #[test]
    fn identity_and_two_by_two() {
        let mut s = LinearSystem::new(3);
        for i in 0..3 {
            s.add(i, i, 1.0);
            s.add_rhs(i, i as f64 + 1.0);
        }
        assert_eq!(DirectSolver::default().solve(&s).unwrap(), vec![1.0, 2.0, 3.0]);

        // [[2, 1], [1, 3]]^{-1} [3, 5] = [0.8, 1.4]
        let mut s = LinearSystem::new(2);
        s.add(0, 0, 2.0);
        s.add(0, 1, 1.0);
        s.add(1, 0, 1.0);
        s.add(1, 1, 3.0);
        s.add_rhs(0, 3.0);
        s.add_rhs(1, 5.0);
        let x = DirectSolver::default().solve(&s).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn saddle_point_with_zero_diagonal() {
        // [[1, 0, 1], [0, 1, 1], [1, 1, 0]] x = [1, 2, 1]: x = [0, 1, 1].
        let mut s = LinearSystem::new(3);
        for &(r, c) in &[(0, 0), (1, 1), (0, 2), (2, 0), (1, 2), (2, 1)] {
            s.add(r, c, 1.0);
        }
        s.add_rhs(0, 1.0);
        s.add_rhs(1, 2.0);
        s.add_rhs(2, 1.0);
        let x = DirectSolver::default().solve(&s).unwrap();
        for (a, b) in x.iter().zip(&[0.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let mut s = LinearSystem::new(2);
        s.add(0, 0, 1.0);
        s.add(0, 1, 1.0);
        s.add(1, 0, 1.0);
        s.add(1, 1, 1.0);
        s.add_rhs(0, 1.0);
        s.add_rhs(1, 2.0);
        let r = DirectSolver::default().solve(&s);
        assert!(matches!(r, Err(VemError::SingularSystem(_)) | Err(VemError::Residual { .. })));
    }

    /// `[K c; c^T 0]` with a dense border `c`; returns the system and the
    /// solution it was built from.
    fn bordered(k_diag: impl Fn(usize) -> f64, c: impl Fn(usize) -> f64, n: usize) -> (LinearSystem, Vec<f64>) {
        let mut s = LinearSystem::new(n + 1);
        for i in 0..n {
            s.add(i, i, k_diag(i));
            // Unknown 0 is left uncoupled within K.
            if i > 0 && i + 1 < n {
                s.add(i, i + 1, -0.5);
                s.add(i + 1, i, -0.5);
            }
            s.add(i, n, c(i));
            s.add(n, i, c(i));
        }
        let x: Vec<f64> = (0..=n).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = s.matrix();
        for (i, v) in a.mul_vec(&x).into_iter().enumerate() {
            s.add_rhs(i, v);
        }
        (s, x)
    }

    #[test]
    fn dense_border_is_solved_through_a_low_rank_correction() {
        let n = 400;
        let (s, x) = bordered(|_| 2.0, |i| 1.0 + (i % 7) as f64 * 0.1, n);
        assert_eq!(dense_indices(&s.matrix()), vec![n]);
        let a = s.matrix();
        let f = BorderedLu::new(&a, &[n]).unwrap();
        let y = DirectSolver::default().refine(&a, s.rhs(), |r| f.apply(r)).unwrap();
        let got = DirectSolver::default().solve(&s).unwrap();
        for (u, v) in [(&y, &x), (&got, &x)] {
            assert!(u.iter().zip(v).all(|(p, q)| (p - q).abs() < 1e-10));
        }
    }

    #[test]
    fn singular_core_falls_back_to_the_full_factorization() {
        // K has null vector e_0, and the border's largest entry is elsewhere,
        // so cutting the border down leaves a singular core.
        let n = 300;
        let (s, x) = bordered(|i| if i == 0 { 0.0 } else { 2.0 }, |i| if i == 0 { 0.1 } else if i == 5 { 3.0 } else { 1.0 }, n);
        let a = s.matrix();
        let solver = DirectSolver::default();
        assert!(BorderedLu::new(&a, &[n]).and_then(|f| solver.refine(&a, s.rhs(), |r| f.apply(r))).is_err());
        let got = DirectSolver::default().solve(&s).unwrap();
        assert!(got.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9));
    }
}
