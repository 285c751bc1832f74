//! Virtual element discretizations on general polygonal meshes.
//!
//! The crate provides three families of local spaces of arbitrary order:
//!
//! * [`vem::pcc`]: H1-conforming primal spaces (Poisson, linear elasticity),
//! * [`vem::mcc`]: H(div)-conforming mixed spaces (Darcy),
//! * [`vem::df`]: divergence-free Stokes spaces, full and reduced,
//!
//! together with the infrastructure they rely on: scaled monomials
//! ([`polybasis`]), polygon geometry and ear clipping ([`geometry`]),
//! quadrature ([`quadrature`]), meshes with markers ([`mesh`]), and
//! global DOF numbering, assembly and a sparse direct solver ([`pde`]).

pub mod error;
pub mod geometry;
pub mod mesh;
pub mod pde;
pub mod polybasis;
pub mod quadrature;
pub mod vem;

pub use error::{Result, VemError};

/// A point (or vector) in the plane.
pub type Point = [f64; 2];
