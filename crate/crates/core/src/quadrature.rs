//! Gauss and Gauss-Lobatto segment rules, collapsed tensor-product triangle
//! rules, and composite polygon rules on an ear-clipped sub-triangulation.

use crate::error::{Result, VemError};
use crate::geometry::{Edge, Polygon2D};
use crate::Point;

/// Highest total degree supported by [`triangle_rule`].
pub const MAX_TRIANGLE_ORDER: usize = 40;

/// Rule on the reference segment `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct SegmentRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Highest polynomial degree integrated exactly.
    pub exactness: usize,
}

impl SegmentRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points and weights mapped onto a polygon edge, ordered from
    /// `edge.start` to `edge.end`.
    pub fn on_edge(&self, edge: &Edge) -> (Vec<Point>, Vec<f64>) {
        let pts = self
            .points
            .iter()
            .map(|&t| edge.point_at(0.5 * (1.0 + t)))
            .collect();
        let w = self.weights.iter().map(|&w| 0.5 * edge.length * w).collect();
        (pts, w)
    }
}

/// Rule on a planar domain.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for m in 2..=n {
        let m = m as f64;
        let p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // P'_n(+-1) = (+-1)^{n+1} n(n+1)/2
        let s = if x > 0.0 { 1.0 } else { (-1f64).powi(n as i32 + 1) };
        s * n * (n + 1.0) / 2.0
    } else {
        n * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

/// Gauss-Legendre rule with `n` points, exact to degree `2n - 1`.
pub fn gauss_segment(n: usize) -> Result<SegmentRule> {
    if n == 0 {
        return Err(VemError::Quadrature("Gauss rule needs at least one point".into()));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Ascending order: root i (descending from +1) goes to the mirror slot.
        points[n - 1 - i] = x;
        points[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Ok(SegmentRule {
        points,
        weights,
        exactness: 2 * n - 1,
    })
}

/// Gauss-Lobatto rule with `n >= 2` points including both endpoints,
/// exact to degree `2n - 3`.
pub fn gauss_lobatto_segment(n: usize) -> Result<SegmentRule> {
    if n < 2 {
        return Err(VemError::Quadrature(
            "Gauss-Lobatto rule needs at least two points".into(),
        ));
    }
    let m = n - 1;
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    points[0] = -1.0;
    points[m] = 1.0;
    let end_w = 2.0 / (n * m) as f64;
    weights[0] = end_w;
    weights[m] = end_w;
    for i in 1..m {
        // Interior nodes are roots of P'_m; start from Chebyshev-Lobatto nodes.
        let mut x = -(std::f64::consts::PI * i as f64 / m as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            let ddp = (2.0 * x * dp - (m * (m + 1)) as f64 * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, _) = legendre(m, x);
        points[i] = x;
        weights[i] = 2.0 / ((n * m) as f64 * p * p);
    }
    // Enforce exact symmetry.
    for i in 0..n / 2 {
        let x = 0.5 * (points[n - 1 - i] - points[i]);
        points[i] = -x;
        points[n - 1 - i] = x;
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Ok(SegmentRule {
        points,
        weights,
        exactness: 2 * n - 3,
    })
}

/// Rule on the reference triangle `(0,0), (1,0), (0,1)` exact for total
/// degree `order`, built by collapsing a Gauss tensor rule on the square.
pub fn triangle_rule(order: usize) -> Result<QuadratureRule> {
    if order > MAX_TRIANGLE_ORDER {
        return Err(VemError::Quadrature(format!(
            "triangle rule of order {order} exceeds the supported maximum {MAX_TRIANGLE_ORDER}"
        )));
    }
    // The collapse Jacobian (1-u) raises the degree in u by one.
    let n = (order + 2).div_ceil(2);
    let g = gauss_segment(n)?;
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&tu, &wu) in g.points.iter().zip(&g.weights) {
        let u = 0.5 * (1.0 + tu);
        for (&tv, &wv) in g.points.iter().zip(&g.weights) {
            let v = 0.5 * (1.0 + tv);
            points.push([u, v * (1.0 - u)]);
            weights.push(0.25 * wu * wv * (1.0 - u));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness: order,
    })
}

/// Composite rule of the given exactness on the polygon's ear-clipped
/// sub-triangulation.
pub fn polygon_rule(polygon: &Polygon2D, order: usize) -> Result<QuadratureRule> {
    let tri = polygon.triangulate()?;
    let reference = triangle_rule(order)?;
    let verts = polygon.vertices();
    let mut points = Vec::with_capacity(tri.triangles.len() * reference.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for t in &tri.triangles {
        let (a, b, c) = (verts[t[0]], verts[t[1]], verts[t[2]]);
        let e1 = [b[0] - a[0], b[1] - a[1]];
        let e2 = [c[0] - a[0], c[1] - a[1]];
        let jac = e1[0] * e2[1] - e1[1] * e2[0];
        for (p, &w) in reference.points.iter().zip(&reference.weights) {
            points.push([
                a[0] + e1[0] * p[0] + e2[0] * p[1],
                a[1] + e1[1] * p[0] + e2[1] * p[1],
            ]);
            weights.push(w * jac);
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness: order,
    })
}
