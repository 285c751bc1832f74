//! Manufactured-solution convergence studies for the polyvem families.

pub mod config;
pub mod problems;
pub mod solution;
pub mod study;
pub mod vtk;

pub use config::Settings;
pub use problems::{Family, ManufacturedProblem};
pub use solution::{solve, Errors, Solution};
pub use study::{rates, run_study, run_study_with, slope, HarnessError, MeshSource, Study, StudyConfig};
