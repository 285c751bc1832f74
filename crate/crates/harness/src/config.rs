//! Study settings from command-line flags and `key=value` files.

use std::path::{Path, PathBuf};

use crate::problems::Family;
use crate::study::{HarnessError, MeshSource, StudyConfig};

/// Partially specified settings; later sources override earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub family: Option<Family>,
    pub order: Option<usize>,
    pub mesh: Option<MeshSource>,
    pub refinements: Option<usize>,
    pub stabilization: Option<polyvem::vem::Stabilization>,
    pub reduced: Option<bool>,
    pub out: Option<PathBuf>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| HarnessError::Config(format!("{key} = {value}: {e}")))
}

impl Settings {
    /// Parses `key=value` lines; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut s = Settings::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key=value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "family" => s.family = Some(parse(key, value)?),
                "order" => s.order = Some(parse(key, value)?),
                "mesh" => s.mesh = Some(parse(key, value)?),
                "refinements" => s.refinements = Some(parse(key, value)?),
                "stabilization" => s.stabilization = Some(parse(key, value)?),
                "reduced" => s.reduced = Some(parse(key, value)?),
                "out" => s.out = Some(PathBuf::from(value)),
                _ => return Err(HarnessError::Config(format!("line {}: unknown key '{key}'", n + 1))),
            }
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Values of `self`, falling back to `base`.
    pub fn or(self, base: Settings) -> Settings {
        Settings {
            family: self.family.or(base.family),
            order: self.order.or(base.order),
            mesh: self.mesh.or(base.mesh),
            refinements: self.refinements.or(base.refinements),
            stabilization: self.stabilization.or(base.stabilization),
            reduced: self.reduced.or(base.reduced),
            out: self.out.or(base.out),
        }
    }

    /// Complete configuration; the family is required, everything else has
    /// a default (lowest useful order, quads, four refinements).
    pub fn resolve(self) -> Result<StudyConfig, HarnessError> {
        let mut family = self
            .family
            .ok_or_else(|| HarnessError::Config("no family given".into()))?;
        if self.reduced.unwrap_or(false) {
            family = match family {
                Family::DfStokes | Family::DfStokesReduced => Family::DfStokesReduced,
                other => return Err(HarnessError::Config(format!("--reduced applies to df_stokes only, not {other}"))),
            };
        }
        let order = self.order.unwrap_or(family.min_order().max(1));
        let mesh = self.mesh.unwrap_or(MeshSource::Structured(polyvem::mesh::StructuredKind::Quads));
        let mut config = StudyConfig::new(family, order, mesh);
        if let Some(r) = self.refinements {
            config.refinements = r;
        }
        if let Some(s) = self.stabilization {
            config.stabilization = s;
        }
        config.out = self.out;
        config.validate()?;
        Ok(config)
    }
}
