//! Convergence studies: mesh sequences, error tables, rates and CSV.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use polyvem::mesh::{read_mesh, unit_square, Mesh2D, StructuredKind};
use polyvem::vem::Stabilization;
use polyvem::VemError;
use thiserror::Error;

use crate::problems::{Family, ManufacturedProblem};
use crate::solution::{solve, Errors, Solution};

/// Largest accepted `|div u_h|` for the divergence-free families.
pub const MAX_DIVERGENCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot load mesh: {0}")]
    Mesh(VemError),

    #[error("solver failure at h = {h:.6e}: {source}")]
    Solver { h: f64, source: VemError },

    #[error("max |div u_h| = {value:e} exceeds {MAX_DIVERGENCE:e} at h = {h:.6e}")]
    Divergence { h: f64, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// 2 for configuration and I/O problems, 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Mesh(_) | HarnessError::Io(_) | HarnessError::Csv(_) => 2,
            HarnessError::Solver { .. } | HarnessError::Divergence { .. } => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeshSource {
    Structured(StructuredKind),
    File(PathBuf),
}

impl FromStr for MeshSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "quads" => MeshSource::Structured(StructuredKind::Quads),
            "triangles" => MeshSource::Structured(StructuredKind::Triangles),
            "hanging_quads" => MeshSource::Structured(StructuredKind::HangingQuads),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => MeshSource::File(PathBuf::from(path)),
                _ => {
                    return Err(format!(
                        "unknown mesh '{s}' (expected quads, triangles, hanging_quads or file:<path>)"
                    ))
                }
            },
        })
    }
}

impl fmt::Display for MeshSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSource::Structured(StructuredKind::Quads) => f.write_str("quads"),
            MeshSource::Structured(StructuredKind::Triangles) => f.write_str("triangles"),
            MeshSource::Structured(StructuredKind::HangingQuads) => f.write_str("hanging_quads"),
            MeshSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl MeshSource {
    /// Unit-square meshes with `4, 8, 16, ...` cells per side, or the single
    /// mesh of a file.
    pub fn meshes(&self, refinements: usize) -> Result<Vec<Mesh2D>, HarnessError> {
        match self {
            MeshSource::Structured(kind) => (0..refinements)
                .map(|i| unit_square(*kind, 4 << i).map_err(HarnessError::Mesh))
                .collect(),
            MeshSource::File(path) => Ok(vec![read_mesh(path).map_err(HarnessError::Mesh)?]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub family: Family,
    pub order: usize,
    pub mesh: MeshSource,
    pub refinements: usize,
    pub stabilization: Stabilization,
    pub out: Option<PathBuf>,
}

impl StudyConfig {
    pub fn new(family: Family, order: usize, mesh: MeshSource) -> Self {
        Self {
            family,
            order,
            mesh,
            refinements: 4,
            stabilization: Stabilization::DofiDofi,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.order < self.family.min_order() {
            return Err(HarnessError::Config(format!(
                "family {} needs order >= {}, got {}",
                self.family,
                self.family.min_order(),
                self.order
            )));
        }
        if self.refinements == 0 {
            return Err(HarnessError::Config("refinements must be positive".into()));
        }
        if self.family == Family::Mcc && self.stabilization != Stabilization::DofiDofi {
            return Err(HarnessError::Config(format!(
                "stabilization {} is not available for the mixed family",
                self.stabilization
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyRow {
    pub h: f64,
    pub ndof: usize,
    pub errors: Errors,
    pub residual: f64,
    pub residual_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Study {
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
}

/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive entries.
pub fn rates(h: &[f64], e: &[f64]) -> Vec<Option<f64>> {
    (0..h.len())
        .map(|i| (i > 0).then(|| (e[i - 1] / e[i]).ln() / (h[i - 1] / h[i]).ln()))
        .collect()
}

/// Least-squares slope of `log e` against `log h`.
pub fn slope(h: &[f64], e: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Named error columns of a family.
type Column = (&'static str, fn(&Errors) -> f64);

impl Study {
    pub fn columns(&self) -> Vec<Column> {
        let mut c: Vec<Column> = vec![("l2", |e| e.l2), ("h1", |e| e.h1)];
        if self.config.family.has_pressure() {
            c.push(("p", |e| e.p.unwrap_or(f64::NAN)));
            c.push(("pi_p", |e| e.pi_p.unwrap_or(f64::NAN)));
        }
        c
    }

    pub fn h(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    pub fn errors(&self, f: fn(&Errors) -> f64) -> Vec<f64> {
        self.rows.iter().map(|r| f(&r.errors)).collect()
    }

    pub fn slope(&self, f: fn(&Errors) -> f64) -> f64 {
        slope(&self.h(), &self.errors(f))
    }

    /// CSV table with a version comment line.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let cols = self.columns();
        let stokes = self.config.family.is_stokes();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["h".to_string(), "ndof".to_string()];
        header.extend(cols.iter().map(|c| format!("err_{}", c.0)));
        header.extend(cols.iter().map(|c| format!("rate_{}", c.0)));
        if stokes {
            header.push("max_div".into());
        }
        w.write_record(&header)?;
        let h = self.h();
        let rates: Vec<_> = cols.iter().map(|c| rates(&h, &self.errors(c.1))).collect();
        for (i, r) in self.rows.iter().enumerate() {
            let mut rec = vec![format!("{:.6e}", r.h), r.ndof.to_string()];
            rec.extend(cols.iter().map(|c| format!("{:.6e}", c.1(&r.errors))));
            rec.extend(rates.iter().map(|rt| rt[i].map(|v| format!("{v:.4}")).unwrap_or_default()));
            if stokes {
                rec.push(format!("{:.3e}", r.errors.max_div.unwrap_or(f64::NAN)));
            }
            w.write_record(&rec)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv");
        Ok(format!("# polyvem {}\n{body}", env!("CARGO_PKG_VERSION")))
    }
}

/// Runs the study for the family's smooth default solution.
pub fn run_study(config: &StudyConfig) -> Result<(Study, Option<(Mesh2D, Solution)>), HarnessError> {
    run_study_with(config, &ManufacturedProblem::smooth(config.family))
}

/// Runs the study for a given manufactured problem; also returns the finest
/// mesh and its solution.
pub fn run_study_with(
    config: &StudyConfig,
    problem: &ManufacturedProblem,
) -> Result<(Study, Option<(Mesh2D, Solution)>), HarnessError> {
    config.validate()?;
    let meshes = config.mesh.meshes(config.refinements)?;
    let mut rows = Vec::with_capacity(meshes.len());
    let mut last = None;
    for mesh in meshes {
        let h = mesh.h();
        let solver_err = |source| HarnessError::Solver { h, source };
        let solution = solve(problem, config.family, &mesh, config.order, config.stabilization).map_err(solver_err)?;
        let errors = solution.errors(&mesh, problem).map_err(solver_err)?;
        if let Some(value) = errors.max_div {
            if !(value <= MAX_DIVERGENCE) {
                return Err(HarnessError::Divergence { h, value });
            }
        }
        rows.push(StudyRow {
            h,
            ndof: solution.num_unknowns(),
            errors,
            residual: solution.residual,
            residual_bound: solution.residual_bound,
        });
        last = Some((mesh, solution));
    }
    Ok((
        Study {
            config: config.clone(),
            rows,
        },
        last,
    ))
}

/// Writes `<family>_k<order>.csv` and `.vtk` into `dir`.
pub fn write_outputs(dir: &Path, study: &Study, csv: &str, mesh: &Mesh2D, solution: &Solution) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let stem = format!("{}_k{}", study.config.family, study.config.order);
    std::fs::write(dir.join(format!("{stem}.csv")), csv)?;
    let vtk = crate::vtk::to_vtk(mesh, solution).map_err(|source| HarnessError::Solver { h: mesh.h(), source })?;
    std::fs::write(dir.join(format!("{stem}.vtk")), vtk)?;
    Ok(())
}
