//! Manufactured problems: exact solutions with analytically derived data.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use polyvem::Point;

pub type Scalar = Box<dyn Fn(Point) -> f64 + Send + Sync>;
pub type Vector = Box<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
/// Tensor field; for gradients, row `c` is the gradient of component `c`.
pub type Tensor = Box<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Pcc,
    Elasticity,
    Mcc,
    DfStokes,
    DfStokesReduced,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Pcc,
        Family::Elasticity,
        Family::Mcc,
        Family::DfStokes,
        Family::DfStokesReduced,
    ];

    pub fn min_order(self) -> usize {
        match self {
            Family::Pcc | Family::Elasticity => 1,
            Family::Mcc => 0,
            Family::DfStokes | Family::DfStokesReduced => 2,
        }
    }

    /// Families solving a saddle-point problem with a pressure.
    pub fn has_pressure(self) -> bool {
        matches!(self, Family::Mcc | Family::DfStokes | Family::DfStokesReduced)
    }

    pub fn is_stokes(self) -> bool {
        matches!(self, Family::DfStokes | Family::DfStokesReduced)
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "pcc" => Family::Pcc,
            "elasticity" => Family::Elasticity,
            "mcc" => Family::Mcc,
            "df_stokes" => Family::DfStokes,
            "df_stokes_reduced" => Family::DfStokesReduced,
            other => {
                return Err(format!(
                    "unknown family '{other}' (expected pcc, elasticity, mcc, df_stokes or df_stokes_reduced)"
                ))
            }
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Pcc => "pcc",
            Family::Elasticity => "elasticity",
            Family::Mcc => "mcc",
            Family::DfStokes => "df_stokes",
            Family::DfStokesReduced => "df_stokes_reduced",
        })
    }
}

/// Exact solution and data of one model problem.
pub enum ManufacturedProblem {
    /// `-div(D grad u) = f`.
    Diffusion {
        u: Scalar,
        grad: Vector,
        diffusion: Tensor,
        source: Scalar,
    },
    /// `-div(2 mu eps(u) + lambda div(u) I) = f`.
    Elasticity {
        u: Vector,
        grad: Tensor,
        lambda: f64,
        mu: f64,
        source: Vector,
    },
    /// `K u = -grad p`, `div u = f`.
    Darcy {
        p: Scalar,
        u: Vector,
        div_u: Scalar,
        k_tensor: Tensor,
        source: Scalar,
    },
    /// `-nu lap u - grad p = f`, `div u = 0`; `p` has zero mean on the
    /// unit square.
    Stokes {
        u: Vector,
        grad: Tensor,
        p: Scalar,
        nu: f64,
        source: Vector,
    },
}

fn identity(_: Point) -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 1.0]]
}

impl ManufacturedProblem {
    /// Smooth default solution of each family on the unit square.
    pub fn smooth(family: Family) -> Self {
        let s = |x: Point| (PI * x[0]).sin() * (PI * x[1]).sin();
        let c = |x: Point| (PI * x[0]).cos() * (PI * x[1]).cos();
        let grad_s = move |x: Point| {
            [
                PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
            ]
        };
        let grad_c = move |x: Point| {
            [
                -PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
                -PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
            ]
        };
        let two_pi2 = 2.0 * PI * PI;
        match family {
            Family::Pcc => Self::Diffusion {
                u: Box::new(s),
                grad: Box::new(grad_s),
                diffusion: Box::new(identity),
                source: Box::new(move |x| two_pi2 * s(x)),
            },
            Family::Elasticity => {
                // u = (s, c): div u = pi (cos sin - cos sin) = 0 and
                // lap u = -2 pi^2 u, so f = -mu lap u - (lambda + mu) grad div u.
                let (lambda, mu) = (1.0, 1.0);
                Self::Elasticity {
                    u: Box::new(move |x| [s(x), c(x)]),
                    grad: Box::new(move |x| [grad_s(x), grad_c(x)]),
                    lambda,
                    mu,
                    source: Box::new(move |x| [mu * two_pi2 * s(x), mu * two_pi2 * c(x)]),
                }
            }
            Family::Mcc => Self::Darcy {
                p: Box::new(s),
                u: Box::new(move |x| {
                    let g = grad_s(x);
                    [-g[0], -g[1]]
                }),
                div_u: Box::new(move |x| two_pi2 * s(x)),
                k_tensor: Box::new(identity),
                source: Box::new(move |x| two_pi2 * s(x)),
            },
            Family::DfStokes | Family::DfStokesReduced => {
                let mean = 1.0 - 1f64.cos();
                Self::Stokes {
                    u: Box::new(|x| [-x[0].cos() * x[1].sin(), x[0].sin() * x[1].cos()]),
                    grad: Box::new(|x| {
                        [
                            [x[0].sin() * x[1].sin(), -x[0].cos() * x[1].cos()],
                            [x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin()],
                        ]
                    }),
                    p: Box::new(move |x| x[0].sin() - mean),
                    nu: 1.0,
                    source: Box::new(|x| {
                        [
                            -2.0 * x[0].cos() * x[1].sin() - x[0].cos(),
                            2.0 * x[0].sin() * x[1].cos(),
                        ]
                    }),
                }
            }
        }
    }

    /// Polynomial solution reproduced exactly by the order-`k` space.
    pub fn patch(family: Family, k: usize) -> Self {
        let k = k as i32;
        match family {
            Family::Pcc => {
                let u = Polynomial::sample(k, 1);
                let (gx, gy) = (u.dx(), u.dy());
                let lap = u.laplacian();
                Self::Diffusion {
                    u: u.into_fn(),
                    grad: Box::new(move |x| [gx.eval(x), gy.eval(x)]),
                    diffusion: Box::new(identity),
                    source: Box::new(move |x| -lap.eval(x)),
                }
            }
            Family::Elasticity => {
                let (lambda, mu) = (1.0, 1.0);
                let u = [Polynomial::sample(k, 2), Polynomial::sample(k, 3)];
                let g = [[u[0].dx(), u[0].dy()], [u[1].dx(), u[1].dy()]];
                // f_c = -(mu lap u_c + (lambda + mu) d_c div u).
                let lap = [u[0].laplacian(), u[1].laplacian()];
                let div_grad = [
                    [g[0][0].dx(), g[1][1].dx()],
                    [g[0][0].dy(), g[1][1].dy()],
                ];
                let u2 = u.clone();
                let g2 = g.clone();
                Self::Elasticity {
                    u: Box::new(move |x| [u2[0].eval(x), u2[1].eval(x)]),
                    grad: Box::new(move |x| {
                        [
                            [g2[0][0].eval(x), g2[0][1].eval(x)],
                            [g2[1][0].eval(x), g2[1][1].eval(x)],
                        ]
                    }),
                    lambda,
                    mu,
                    source: Box::new(move |x| {
                        let f = |c: usize| {
                            -(mu * lap[c].eval(x)
                                + (lambda + mu) * (div_grad[c][0].eval(x) + div_grad[c][1].eval(x)))
                        };
                        [f(0), f(1)]
                    }),
                }
            }
            Family::Mcc => {
                let p = Polynomial::sample(k + 1, 4);
                let (px, py) = (p.dx(), p.dy());
                let lap = p.laplacian();
                let lap2 = lap.clone();
                Self::Darcy {
                    p: p.into_fn(),
                    u: Box::new(move |x| [-px.eval(x), -py.eval(x)]),
                    div_u: Box::new(move |x| -lap.eval(x)),
                    k_tensor: Box::new(identity),
                    source: Box::new(move |x| -lap2.eval(x)),
                }
            }
            Family::DfStokes | Family::DfStokesReduced => {
                // u = curl psi is divergence-free; p has zero mean on the unit square.
                let psi = Polynomial::sample(k + 1, 5);
                let (u0, u1) = (psi.dy(), psi.dx().scaled(-1.0));
                let raw = Polynomial::sample(k - 1, 6);
                let p = raw.clone().plus_constant(-raw.unit_square_mean());
                let (lap0, lap1) = (u0.laplacian(), u1.laplacian());
                let (px, py) = (p.dx(), p.dy());
                let grads = [[u0.dx(), u0.dy()], [u1.dx(), u1.dy()]];
                Self::Stokes {
                    u: Box::new(move |x| [u0.eval(x), u1.eval(x)]),
                    grad: Box::new(move |x| {
                        [
                            [grads[0][0].eval(x), grads[0][1].eval(x)],
                            [grads[1][0].eval(x), grads[1][1].eval(x)],
                        ]
                    }),
                    p: p.into_fn(),
                    nu: 1.0,
                    source: Box::new(move |x| {
                        [-lap0.eval(x) - px.eval(x), -lap1.eval(x) - py.eval(x)]
                    }),
                }
            }
        }
    }
}

/// Bivariate polynomial `sum c x^i y^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial(pub Vec<(f64, i32, i32)>);

impl Polynomial {
    /// Dense polynomial of total degree `deg` with fixed pseudo-random
    /// coefficients in `[-1, 1]`.
    pub fn sample(deg: i32, seed: u64) -> Self {
        let mut state = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut terms = Vec::new();
        for d in 0..=deg.max(0) {
            for j in 0..=d {
                state = state
                    .wrapping_mul(6_364_136_223_846_793_005)
                    .wrapping_add(1_442_695_040_888_963_407);
                let c = (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
                terms.push((c, d - j, j));
            }
        }
        Self(terms)
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.0
            .iter()
            .map(|&(c, i, j)| c * x[0].powi(i) * x[1].powi(j))
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
        let mut terms = self.dx().dx().0;
        terms.extend(self.dy().dy().0);
        Self(terms)
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.0 {
            t.0 *= s;
        }
        self
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.0.push((c, 0, 0));
        self
    }

    pub fn unit_square_mean(&self) -> f64 {
        self.0
            .iter()
            .map(|&(c, i, j)| c / ((i + 1) * (j + 1)) as f64)
            .sum()
    }

    pub fn into_fn(self) -> Scalar {
        Box::new(move |x| self.eval(x))
    }
}
