//! Periodic cell-centred grids, face-based stencils and norms.
//!
//! Cells are stored row-major: in two dimensions index `i0 * n + i1`, with
//! axis 0 the slow axis. Face `k` of cell `i` sits between `i` and its `+1`
//! neighbour along axis `k`, so a [`FaceFlux`] has one value per cell per axis.

mod norms;
pub mod snapshot;

pub use norms::{hminus1_norm, integrate, lp_norm, mollify, HMinus1, Norm, Spectral};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("unsupported dimension {0} (only 1 and 2 are supported)")]
    Dimension(usize),
    #[error("cells per axis must be a power of two and at least 8 (got {0})")]
    Cells(usize),
    #[error("domain length must be finite and positive (got {0})")]
    Length(f64),
    #[error("field has {got} values, grid needs {need}")]
    Shape { need: usize, got: usize },
    #[error("non-finite value {value} at cell {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("mollifier width {width} is below the grid spacing {h}")]
    MollifierWidth { width: f64, h: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
}

/// A periodic box `[0, L)^d` split into `N^d` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    cells: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, cells: usize, length: f64) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        if cells < 8 || !cells.is_power_of_two() {
            return Err(GridError::Cells(cells));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::Length(length));
        }
        Ok(Self { dim, cells, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of a flat cell index.
    pub fn unravel(&self, index: usize) -> [usize; 2] {
        match self.dim {
            1 => [index, 0],
            _ => [index / self.cells, index % self.cells],
        }
    }

    /// Cell-centre coordinates.
    pub fn center(&self, index: usize) -> [f64; 2] {
        let h = self.h();
        let [i0, i1] = self.unravel(index);
        [(i0 as f64 + 0.5) * h, (i1 as f64 + 0.5) * h]
    }

    /// Neighbour of `index` one step forward (`forward = true`) or back along `axis`.
    #[inline]
    pub fn neighbor(&self, index: usize, axis: usize, forward: bool) -> usize {
        let n = self.cells;
        let step = |i: usize| if forward { (i + 1) % n } else { (i + n - 1) % n };
        match (self.dim, axis) {
            (1, _) => step(index),
            (_, 0) => step(index / n) * n + index % n,
            _ => (index / n) * n + step(index % n),
        }
    }
}

/// One finite value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wraps `values`, rejecting wrong lengths and non-finite entries.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Shape {
                need: grid.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    // callers guarantee length and finiteness
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self, GridError> {
        Self::new(grid, vec![value; grid.len()])
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self, GridError> {
        Self::new(grid, (0..grid.len()).map(|i| f(grid.center(i))).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cellwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Field::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field, GridError> {
        Field::new(self.grid, self.values.iter().map(|v| f(*v)).collect())
    }
}

/// Face-centred values, one array per axis (flux units).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFlux {
    grid: Grid,
    axes: Vec<Vec<f64>>,
}

impl FaceFlux {
    pub fn new(grid: Grid, axes: Vec<Vec<f64>>) -> Result<Self, GridError> {
        if axes.len() != grid.dim() {
            return Err(GridError::Dimension(axes.len()));
        }
        for axis in &axes {
            if axis.len() != grid.len() {
                return Err(GridError::Shape {
                    need: grid.len(),
                    got: axis.len(),
                });
            }
        }
        Ok(Self { grid, axes })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            axes: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn axis(&self, k: usize) -> &[f64] {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// `Σ_faces |J|² h^d`.
    pub fn l2_squared(&self) -> f64 {
        let dv = self.grid.cell_volume();
        self.axes
            .iter()
            .flat_map(|a| a.iter())
            .map(|v| v * v)
            .sum::<f64>()
            * dv
    }

    /// `Σ_faces J·K h^d`.
    pub fn dot(&self, other: &FaceFlux) -> f64 {
        let dv = self.grid.cell_volume();
        self.axes
            .iter()
            .zip(&other.axes)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| x * y)
            .sum::<f64>()
            * dv
    }

    pub fn max_abs(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Two-point difference `(f[i+e_k] - f[i]) / h` on every face.
pub fn gradient_faces(f: &Field) -> FaceFlux {
    let grid = *f.grid();
    let h = grid.h();
    let v = f.values();
    let axes = (0..grid.dim())
        .map(|k| {
            (0..grid.len())
                .map(|i| (v[grid.neighbor(i, k, true)] - v[i]) / h)
                .collect()
        })
        .collect();
    FaceFlux { grid, axes }
}

/// Conservative divergence `Σ_k (J_k[i] - J_k[i-e_k]) / h`.
pub fn divergence(flux: &FaceFlux) -> Field {
    let grid = flux.grid;
    let h = grid.h();
    let mut out = vec![0.0; grid.len()];
    for (k, axis) in flux.axes.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate() {
            *o += (axis[i] - axis[grid.neighbor(i, k, false)]) / h;
        }
    }
    Field { grid, values: out }
}

/// Standard `2d + 1`-point Laplacian, `divergence(gradient_faces(f))`.
pub fn laplacian(f: &Field) -> Field {
    divergence(&gradient_faces(f))
}
