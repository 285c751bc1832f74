//! Helpers shared by the local spaces: edge traces, dense solves, mass
//! matrices and DOF-based stabilizations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VemError};
use crate::geometry::Polygon2D;
use crate::polybasis::MonomialBasis;
use crate::quadrature::{gauss_lobatto_segment, gauss_segment, QuadratureRule};
use crate::Point;

/// Values of the Lagrange polynomials on `nodes` at `s`.
pub fn lagrange_1d(nodes: &[f64], s: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (s - xj) / (nodes[i] - xj))
                .product()
        })
        .collect()
}

/// Interior Gauss-Lobatto parameters in `(0, 1)` of a degree-`k` trace.
pub fn lobatto_interior(k: usize) -> Result<Vec<f64>> {
    let gl = gauss_lobatto_segment(k + 1)?;
    Ok(gl.points[1..k].iter().map(|&t| 0.5 * (1.0 + t)).collect())
}

/// Boundary data of one polygon edge for a continuous trace of degree `k`
/// interpolated at `[start, lobatto interior nodes, end]`.
#[derive(Clone, Debug)]
pub struct EdgeTrace {
    pub normal: [f64; 2],
    pub length: f64,
    /// Positions of the interior nodes (the edge DOF locations).
    pub nodes: Vec<Point>,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// `lagrange[(q, j)]`: value at `points[q]` of the Lagrange function of
    /// node `j` (0 = start vertex, `k` = end vertex).
    pub lagrange: DMatrix<f64>,
}

/// Edge traces with a Gauss rule of `n_gauss` points on every edge.
pub fn edge_traces(polygon: &Polygon2D, k: usize, n_gauss: usize) -> Result<Vec<EdgeTrace>> {
    let interior = lobatto_interior(k)?;
    let mut params = vec![0.0];
    params.extend(&interior);
    params.push(1.0);
    let g = gauss_segment(n_gauss)?;
    polygon
        .edges()
        .iter()
        .map(|e| {
            let (points, weights) = g.on_edge(e);
            let mut lagrange = DMatrix::zeros(points.len(), k + 1);
            for (q, &t) in g.points.iter().enumerate() {
                for (j, l) in lagrange_1d(&params, 0.5 * (1.0 + t)).into_iter().enumerate() {
                    lagrange[(q, j)] = l;
                }
            }
            Ok(EdgeTrace {
                normal: e.normal,
                length: e.length,
                nodes: interior.iter().map(|&s| e.point_at(s)).collect(),
                points,
                weights,
                lagrange,
            })
        })
        .collect()
}

/// `A^{-1} B` by LU, rejecting singular or non-finite results.
pub fn solve_dense(a: DMatrix<f64>, b: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let x = a.lu().solve(b).ok_or(VemError::SingularLocal(what))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(VemError::SingularLocal(what));
    }
    Ok(x)
}

/// `M[(i, j)] = int m^a_i m^b_j`.
pub fn mass_matrix(rule: &QuadratureRule, a: &MonomialBasis, b: &MonomialBasis) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.len(), b.len());
    for (&x, &w) in rule.points.iter().zip(&rule.weights) {
        let va = a.eval(x);
        let vb = b.eval(x);
        for i in 0..a.len() {
            let wi = w * va[i];
            for j in 0..b.len() {
                m[(i, j)] += wi * vb[j];
            }
        }
    }
    m
}

/// `(I - D P)^T W (I - D P)` with `W = diag(weights)` (identity if `None`).
pub fn projected_dof_stabilization(
    d: &DMatrix<f64>,
    proj: &DMatrix<f64>,
    weights: Option<&DVector<f64>>,
) -> DMatrix<f64> {
    let n = d.nrows();
    let r = DMatrix::<f64>::identity(n, n) - d * proj;
    let s = match weights {
        None => r.transpose() * &r,
        Some(w) => {
            let mut wr = r.clone();
            for i in 0..n {
                wr.row_mut(i).scale_mut(w[i]);
            }
            r.transpose() * wr
        }
    };
    symmetrize(s)
}

/// `(S + S^T) / 2`, removing round-off asymmetry.
pub fn symmetrize(s: DMatrix<f64>) -> DMatrix<f64> {
    let t = s.transpose();
    (s + t) * 0.5
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Numerical rank with relative threshold `tol`.
pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol * smax).count()
}
