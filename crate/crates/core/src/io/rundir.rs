//! Run directories: `config.toml`, `manifest.json`, `ledger.csv` and
//! `snapshots/{rho1,rho2,n}_NNNNN.xflw`.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::config::{emit_config, parse_config, ConfigError, ConfigFile};
use crate::diagnostics::DissipationLedger;
use crate::grid::snapshot::{read_field, write_field, SnapshotError};
use crate::grid::Grid;
use crate::solver::{SimConfig, SnapshotSet, Trajectory};

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LEDGER_FILE: &str = "ledger.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Error)]
pub enum RunDirError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Snapshot {
        path: PathBuf,
        #[source]
        source: SnapshotError,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("ledger: {0}")]
    Ledger(#[from] csv::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunDirError + '_ {
    move |source| RunDirError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub rho1: String,
    pub rho2: String,
    pub n: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the stored `config.toml`, hex.
    pub config_hash: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub steps: usize,
    pub snapshots: Vec<SnapshotEntry>,
    pub abort: Option<String>,
    pub warnings: Vec<String>,
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn now_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Writes the three fields of a checkpoint as `{name}_{index:05}.xflw` under `dir`.
pub fn save_snapshot(dir: &Path, index: usize, s: &SnapshotSet) -> Result<SnapshotEntry, RunDirError> {
    let mut names = Vec::with_capacity(3);
    for (name, f) in [("rho1", &s.rho1), ("rho2", &s.rho2), ("n", &s.n)] {
        let file = format!("{name}_{index:05}.xflw");
        let path = dir.join(&file);
        write_field(&path, f, s.t).map_err(io_err(&path))?;
        names.push(format!("{SNAPSHOT_DIR}/{file}"));
    }
    let [rho1, rho2, n]: [String; 3] = names.try_into().expect("three fields");
    Ok(SnapshotEntry { t: s.t, rho1, rho2, n })
}

/// Reads a checkpoint listed in a manifest and checks it against `grid`.
pub fn load_snapshot(run_dir: &Path, entry: &SnapshotEntry, grid: &Grid) -> Result<SnapshotSet, RunDirError> {
    let mut fields = Vec::with_capacity(3);
    for rel in [&entry.rho1, &entry.rho2, &entry.n] {
        let path = run_dir.join(rel);
        let (f, t) = read_field(&path).map_err(|source| RunDirError::Snapshot {
            path: path.clone(),
            source,
        })?;
        if f.grid() != grid {
            return Err(RunDirError::Manifest(format!(
                "{} has grid {:?}, config has {:?}",
                path.display(),
                f.grid(),
                grid
            )));
        }
        if t.to_bits() != entry.t.to_bits() {
            return Err(RunDirError::Manifest(format!(
                "{} stores t = {t}, manifest lists {}",
                path.display(),
                entry.t
            )));
        }
        fields.push(f);
    }
    let mut it = fields.into_iter();
    Ok(SnapshotSet {
        t: entry.t,
        rho1: it.next().expect("rho1"),
        rho2: it.next().expect("rho2"),
        n: it.next().expect("n"),
    })
}

/// Persists a finished (or aborted) trajectory into `dir`, which is created.
pub fn write_run(dir: &Path, file: &ConfigFile, traj: &Trajectory, started: f64) -> Result<RunManifest, RunDirError> {
    let snaps = dir.join(SNAPSHOT_DIR);
    fs::create_dir_all(&snaps).map_err(io_err(&snaps))?;
    let text = emit_config(file);
    let cfg_path = dir.join(CONFIG_FILE);
    fs::write(&cfg_path, &text).map_err(io_err(&cfg_path))?;

    let ledger_path = dir.join(LEDGER_FILE);
    let out = fs::File::create(&ledger_path).map_err(io_err(&ledger_path))?;
    traj.ledger.to_csv(BufWriter::new(out))?;

    let snapshots = traj
        .snapshots
        .iter()
        .enumerate()
        .map(|(k, s)| save_snapshot(&snaps, k, s))
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = RunManifest {
        config_hash: config_hash(&text),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now_seconds(),
        steps: traj.steps,
        snapshots,
        abort: traj.abort.as_ref().map(|e| e.to_string()),
        warnings: traj.warnings.clone(),
    };
    let man_path = dir.join(MANIFEST_FILE);
    let mut w = BufWriter::new(fs::File::create(&man_path).map_err(io_err(&man_path))?);
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| RunDirError::Manifest(e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(&man_path))?;
    Ok(manifest)
}

/// A run directory read back from disk with its manifest checked.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub file: ConfigFile,
    pub sim: SimConfig,
    pub manifest: RunManifest,
    pub ledger: DissipationLedger,
}

impl LoadedRun {
    pub fn snapshot(&self, dir: &Path, k: usize) -> Result<SnapshotSet, RunDirError> {
        let entry = self
            .manifest
            .snapshots
            .get(k)
            .ok_or_else(|| RunDirError::Manifest(format!("no snapshot {k}")))?;
        load_snapshot(dir, entry, &self.sim.grid)
    }
}

/// Loads a run directory, verifying the config hash and that every listed
/// snapshot exists and parses on the configured grid.
pub fn read_run(dir: &Path) -> Result<LoadedRun, RunDirError> {
    let cfg_path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&cfg_path).map_err(io_err(&cfg_path))?;
    let man_path = dir.join(MANIFEST_FILE);
    let man_file = fs::File::open(&man_path).map_err(io_err(&man_path))?;
    let manifest: RunManifest =
        serde_json::from_reader(BufReader::new(man_file)).map_err(|e| RunDirError::Manifest(e.to_string()))?;
    if manifest.config_hash != config_hash(&text) {
        return Err(RunDirError::Manifest("config hash does not match config.toml".into()));
    }
    let (file, sim) = parse_config(&text)?;
    for entry in &manifest.snapshots {
        load_snapshot(dir, entry, &sim.grid)?;
    }
    let ledger_path = dir.join(LEDGER_FILE);
    let ledger = DissipationLedger::from_csv(BufReader::new(
        fs::File::open(&ledger_path).map_err(io_err(&ledger_path))?,
    ))?;
    Ok(LoadedRun {
        file,
        sim,
        manifest,
        ledger,
    })
}
