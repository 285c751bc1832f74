#![allow(dead_code)]

use polyvem::mesh::{unit_square, Mesh2D, StructuredKind};
use polyvem::Point;

/// Polynomial as a list of `(coefficient, i, j)` for `c x^i y^j`.
#[derive(Clone, Debug)]
pub struct Poly(pub Vec<(f64, i32, i32)>);

impl Poly {
    /// Dense polynomial of total degree `deg` with deterministic coefficients.
    pub fn sample(deg: i32, seed: u64) -> Self {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut terms = Vec::new();
        for d in 0..=deg {
            for j in 0..=d {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let c = ((s >> 33) as f64 / (1u64 << 31) as f64) * 2.0 - 1.0;
                terms.push((c, d - j, j));
            }
        }
        Self(terms)
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.0
            .iter()
            .map(|&(c, i, j)| c * p[0].powi(i) * p[1].powi(j))
            .sum()
    }

    pub fn dx(&self) -> Self {
        Self(
            self.0
                .iter()
                .filter(|t| t.1 > 0)
                .map(|&(c, i, j)| (c * i as f64, i - 1, j))
                .collect(),
        )
    }

    pub fn dy(&self) -> Self {
        Self(
            self.0
                .iter()
                .filter(|t| t.2 > 0)
                .map(|&(c, i, j)| (c * j as f64, i, j - 1))
                .collect(),
        )
    }

    pub fn laplacian(&self) -> Self {
        let mut t = self.dx().dx().0;
        t.extend(self.dy().dy().0);
        Self(t)
    }

    /// Integral over the unit square.
    pub fn mean_unit_square(&self) -> f64 {
        self.0
            .iter()
            .map(|&(c, i, j)| c / ((i + 1) * (j + 1)) as f64)
            .sum()
    }

    pub fn add_constant(mut self, c: f64) -> Self {
        self.0.push((c, 0, 0));
        self
    }
}

pub fn marked(kind: StructuredKind, n: usize) -> Mesh2D {
    unit_square(kind, n).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
