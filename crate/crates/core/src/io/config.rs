//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! dim = 1            # 1 or 2
//! cells = 256        # power of two, >= 8
//! length = 4.0
//!
//! [energy]
//! family = "power"   # power | entropy | incompressible | tabulated
//! m = 2.0            # power only, > 1
//! # table = "z.txt"  # tabulated only: two columns a, z(a)
//!
//! [physics]          # all optional
//! gamma = 0.0
//! alpha = 0.0
//! c1 = 0.0
//! c2 = 0.0
//! p_min = -10.0
//! velocity = { kind = "zero" }   # zero | constant { value } | rotating { omega, center }
//!
//! [sources]          # optional, default off
//! kind = "homeostatic"
//! g1 = 5.0
//! p_h = 2.0
//! d1 = 0.0
//! d2 = 0.0
//!
//! [time]
//! t_end = 0.5
//! cfl_safety = 0.9           # optional
//! snapshot_every = 0.05      # optional, default: only t = 0 and t_end
//!
//! [initial.rho1]     # optional, default zero; rho2 defaults to zero, n to one
//! kind = "gaussian"
//! amplitude = 1.0
//! width = 0.3
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyPair;
use crate::grid::Grid;
use crate::solver::{InitialError, InitialSpec, InitialSpecs, SimConfig, SolverError, SourceModel, Velocity};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Initial(#[from] InitialError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub cells: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergySection {
    Power { m: f64 },
    Entropy {},
    Incompressible {},
    Tabulated { table: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocitySection {
    Zero {},
    Constant { value: Vec<f64> },
    Rotating {
        omega: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    pub gamma: f64,
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub p_min: f64,
    pub velocity: VelocitySection,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            alpha: 0.0,
            c1: 0.0,
            c2: 0.0,
            p_min: -10.0,
            velocity: VelocitySection::Zero {},
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourcesSection {
    Off {},
    Homeostatic {
        g1: f64,
        p_h: f64,
        #[serde(default)]
        d1: f64,
        #[serde(default)]
        d2: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
}

impl Default for SourcesSection {
    fn default() -> Self {
        SourcesSection::Off {}
    }
}

fn default_safety() -> f64 {
    0.9
}

/// The parsed file. Paths are kept as written; see [`ConfigFile::resolve_paths`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSection,
    pub energy: EnergySection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub sources: SourcesSection,
    pub time: TimeSection,
    #[serde(default = "default_initial")]
    pub initial: InitialSpecs,
}

fn default_initial() -> InitialSpecs {
    InitialSpecs::single(InitialSpec::Zero {})
}

fn point(name: &str, v: &Option<Vec<f64>>, grid: &Grid) -> Result<[f64; 2], ConfigError> {
    let mid = 0.5 * grid.length();
    match v {
        None => Ok([mid, if grid.dim() == 2 { mid } else { 0.0 }]),
        Some(c) => vec2(name, c, grid),
    }
}

fn vec2(name: &str, c: &[f64], grid: &Grid) -> Result<[f64; 2], ConfigError> {
    if c.len() != grid.dim() {
        return Err(ConfigError::Invalid(format!(
            "{name} has {} components, grid has dimension {}",
            c.len(),
            grid.dim()
        )));
    }
    Ok([c[0], c.get(1).copied().unwrap_or(0.0)])
}

impl ConfigFile {
    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.grid.dim, self.grid.cells, self.grid.length)
            .map_err(|e| ConfigError::Invalid(format!("grid: {e}")))
    }

    pub fn energy(&self) -> Result<EnergyPair, ConfigError> {
        match &self.energy {
            EnergySection::Power { m } if *m == 1.0 => Err(ConfigError::Invalid(
                "m = 1 is not a power law; the m -> 1 limit is the entropy energy, \
                 select it with family = \"entropy\" (EnergyPair::entropy)"
                    .into(),
            )),
            EnergySection::Power { m } => {
                EnergyPair::power(*m).map_err(|e| ConfigError::Invalid(format!("energy: {e}")))
            }
            EnergySection::Entropy {} => Ok(EnergyPair::entropy()),
            EnergySection::Incompressible {} => Ok(EnergyPair::incompressible()),
            EnergySection::Tabulated { table } => {
                let text = std::fs::read_to_string(table).map_err(|source| ConfigError::Read {
                    path: table.clone(),
                    source,
                })?;
                EnergyPair::from_table_text(&text).map_err(|e| ConfigError::Invalid(format!("energy table: {e}")))
            }
        }
    }

    /// Makes relative file paths relative to `base` (the config's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let EnergySection::Tabulated { table } = &mut self.energy {
            fix(table);
        }
        for spec in [&mut self.initial.rho1, &mut self.initial.rho2, &mut self.initial.n] {
            if let InitialSpec::File { path } = spec {
                fix(path);
            }
        }
    }

    /// Builds and validates the solver configuration, reading any files.
    pub fn to_sim(&self) -> Result<SimConfig, ConfigError> {
        let grid = self.grid()?;
        let energy = self.energy()?;
        let initial = self.initial.build(&grid)?;
        let mut c = SimConfig::new(energy, initial);
        let ph = &self.physics;
        c.gamma = ph.gamma;
        c.alpha = ph.alpha;
        c.c1 = ph.c1;
        c.c2 = ph.c2;
        c.p_min = ph.p_min;
        c.velocity = match &ph.velocity {
            VelocitySection::Zero {} => Velocity::Zero,
            VelocitySection::Constant { value } => Velocity::Constant(vec2("velocity value", value, &grid)?),
            VelocitySection::Rotating { omega, center } => Velocity::Rotating {
                omega: *omega,
                center: point("velocity center", center, &grid)?,
            },
        };
        c.sources = match self.sources {
            SourcesSection::Off {} => SourceModel::Off,
            SourcesSection::Homeostatic { g1, p_h, d1, d2 } => SourceModel::Homeostatic { g1, p_h, d1, d2 },
        };
        c.t_end = self.time.t_end;
        c.cfl_safety = self.time.cfl_safety;
        c.snapshot_every = self.time.snapshot_every.unwrap_or(f64::INFINITY);
        c.validate()?;
        Ok(c)
    }
}

/// Parses and fully validates; relative paths resolve against the working directory.
pub fn parse_config(text: &str) -> Result<(ConfigFile, SimConfig), ConfigError> {
    let file: ConfigFile = toml::from_str(text)?;
    let sim = file.to_sim()?;
    Ok((file, sim))
}

/// Reads a config file; relative paths inside resolve against its directory.
pub fn load_config(path: &Path) -> Result<(ConfigFile, SimConfig), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut file: ConfigFile = toml::from_str(&text)?;
    if let Some(dir) = path.parent() {
        file.resolve_paths(dir);
    }
    let sim = file.to_sim()?;
    Ok((file, sim))
}

pub fn emit_config(file: &ConfigFile) -> String {
    toml::to_string(file).expect("config tree is representable in TOML")
}
