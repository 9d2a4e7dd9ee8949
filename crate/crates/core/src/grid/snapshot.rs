//! Binary field snapshots.
//!
//! Layout (little-endian): magic `XFLW`, `u32` version, `u32` dimension, one
//! `u32` cell count per axis, one `f64` length per axis, `f64` time, then the
//! values in row-major order. The format admits three dimensions even though
//! [`Grid`] does not.

use std::io::{self, Read, Write};

use thiserror::Error;

use super::{Field, Grid, GridError};

pub const MAGIC: &[u8; 4] = b"XFLW";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("corrupt header: {0}")]
    CorruptHeader(&'static str),
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload: expected {need} values, read {got}")]
    Truncated { need: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Decoded file contents before validation against [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub cells: Vec<u32>,
    pub lengths: Vec<f64>,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_field(f: &Field, t: f64) -> Self {
        let g = f.grid();
        Self {
            cells: vec![g.cells() as u32; g.dim()],
            lengths: vec![g.length(); g.dim()],
            t,
            values: f.values().to_vec(),
        }
    }

    /// Converts to a field; anisotropic or 3-d snapshots are rejected.
    pub fn into_field(self) -> Result<(Field, f64), SnapshotError> {
        let dim = self.cells.len();
        let n = self.cells[0] as usize;
        if self.cells.iter().any(|&c| c as usize != n) {
            return Err(SnapshotError::CorruptHeader("anisotropic cell counts"));
        }
        if self.lengths.iter().any(|&l| l != self.lengths[0]) {
            return Err(SnapshotError::CorruptHeader("anisotropic lengths"));
        }
        let grid = Grid::new(dim, n, self.lengths[0])?;
        Ok((Field::new(grid, self.values)?, self.t))
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.cells.len() as u32).to_le_bytes())?;
        for c in &self.cells {
            w.write_all(&c.to_le_bytes())?;
        }
        for l in &self.lengths {
            w.write_all(&l.to_le_bytes())?;
        }
        w.write_all(&self.t.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, SnapshotError> {
        let mut header = |len: usize| -> Result<Vec<u8>, SnapshotError> {
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(|e| match e.kind() {
                io::ErrorKind::UnexpectedEof => SnapshotError::CorruptHeader("truncated header"),
                _ => SnapshotError::Io(e),
            })?;
            Ok(buf)
        };
        if header(4)? != MAGIC {
            return Err(SnapshotError::CorruptHeader("bad magic"));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
        let f64_at = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
        let version = u32_at(&header(4)?);
        if version != VERSION {
            return Err(SnapshotError::UnsupportedVersion(version));
        }
        let dim = u32_at(&header(4)?) as usize;
        if !(1..=3).contains(&dim) {
            return Err(SnapshotError::CorruptHeader("dimension out of range"));
        }
        let cells: Vec<u32> = header(4 * dim)?.chunks(4).map(u32_at).collect();
        let lengths: Vec<f64> = header(8 * dim)?.chunks(8).map(f64_at).collect();
        let t = f64_at(&header(8)?);
        let need = cells
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c as usize))
            .ok_or(SnapshotError::CorruptHeader("cell count overflow"))?;
        drop(header);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let got = bytes.len() / 8;
        if got < need {
            return Err(SnapshotError::Truncated { need, got });
        }
        let values = bytes[..need * 8].chunks(8).map(f64_at).collect();
        Ok(Self {
            cells,
            lengths,
            t,
            values,
        })
    }
}

pub fn write_field(path: &std::path::Path, f: &Field, t: f64) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = io::BufWriter::new(file);
    Snapshot::from_field(f, t).write_to(&mut w)?;
    w.flush()
}

pub fn read_field(path: &std::path::Path) -> Result<(Field, f64), SnapshotError> {
    let file = std::fs::File::open(path)?;
    Snapshot::read_from(io::BufReader::new(file))?.into_field()
}
