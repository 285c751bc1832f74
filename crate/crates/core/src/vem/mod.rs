//! Local virtual element spaces.
//!
//! Each space stores its DOF layout together with the coefficient matrices
//! ("star" matrices) mapping local DOF vectors to the monomial coefficients
//! of the computable projections.

pub mod common;
pub mod df;
pub mod mcc;
pub mod pcc;

pub use df::{DfLocalSpace, DfReduction};
pub use mcc::{pressure_basis, MccLocalSpace};
pub use pcc::{PccLocalSpace, PccReferenceElement};

/// Projections of scalar primal basis functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// H1-seminorm projection onto `P_k`.
    PiNabla,
    /// Enhanced L2 projection onto `P_k`.
    Pi0k,
    /// L2 projection onto `P_{k-1}`.
    Pi0km1,
}

/// Stabilization recipe for primal and divergence-free spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Stabilization {
    /// Euclidean product of the DOFs of the non-polynomial remainder.
    #[default]
    DofiDofi,
    /// Dofi-dofi weighted by the consistency diagonal, clamped below by 1.
    DRecipe,
}

impl std::str::FromStr for Stabilization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dofi_dofi" => Ok(Self::DofiDofi),
            "d_recipe" => Ok(Self::DRecipe),
            other => Err(format!("unknown stabilization '{other}' (expected dofi_dofi or d_recipe)")),
        }
    }
}

impl std::fmt::Display for Stabilization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::DofiDofi => "dofi_dofi",
            Self::DRecipe => "d_recipe",
        })
    }
}

/// Small fixed set of shapes exercising convex, non-convex, hanging-node
/// and off-origin polygons.
#[cfg(test)]
pub(crate) fn test_polygons() -> Vec<crate::geometry::Polygon2D> {
    use crate::geometry::Polygon2D;
    vec![
        Polygon2D::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap(),
        Polygon2D::new(vec![
            [0.25, 0.5],
            [0.5, 0.5],
            [0.5, 0.625],
            [0.5, 0.75],
            [0.25, 0.75],
        ])
        .unwrap(),
        Polygon2D::new(vec![
            [2.0, 1.0],
            [2.4, 1.0],
            [2.4, 1.2],
            [2.2, 1.2],
            [2.2, 1.4],
            [2.0, 1.4],
        ])
        .unwrap(),
        Polygon2D::new(vec![[0.1, 0.1], [0.6, 0.2], [0.3, 0.5]]).unwrap(),
        Polygon2D::new(vec![
            [0.0, 0.0],
            [0.8, -0.1],
            [1.1, 0.4],
            [0.9, 0.9],
            [0.3, 1.0],
            [-0.2, 0.5],
        ])
        .unwrap(),
    ]
}
