use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Field, Grid, GridError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

/// Discrete Lebesgue norm with cell-volume weights.
pub fn lp_norm(f: &Field, norm: Norm) -> f64 {
    let dv = f.grid().cell_volume();
    let v = f.values();
    match norm {
        Norm::L1 => v.iter().map(|x| x.abs()).sum::<f64>() * dv,
        Norm::L2 => (v.iter().map(|x| x * x).sum::<f64>() * dv).sqrt(),
        Norm::LInf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

/// `Σ f h^d`.
pub fn integrate(f: &Field) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

/// Homogeneous `Ḣ⁻¹` seminorm of the mean-free part, plus the mean that was removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HMinus1 {
    pub seminorm: f64,
    pub mean: f64,
}

/// Cached FFT plans for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // 1/|κ|² with the discrete-Laplacian symbol, 0 at the zero mode
    inv_kappa2: Vec<f64>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let n = grid.cells();
        let h = grid.h();
        let mut planner = FftPlanner::new();
        let inv_kappa2 = (0..grid.len())
            .map(|idx| {
                if idx == 0 {
                    return 0.0;
                }
                let k = wave_indices(&grid, idx);
                let kappa2: f64 = k[..grid.dim()]
                    .iter()
                    .map(|&kk| (2.0 / h * (PI * kk / n as f64).sin()).powi(2))
                    .sum();
                1.0 / kappa2
            })
            .collect();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            grid,
            inv_kappa2,
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.grid.cells();
        let fft = if inverse { &self.inverse } else { &self.forward };
        // rows (fast axis) are contiguous
        fft.process(data);
        if self.grid.dim() == 2 {
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                fft.process(&mut col);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
        }
    }

    /// `sup ⟨f, φ⟩ / ‖∇_h φ‖` over periodic test functions, computed with the
    /// symbol of the discrete Laplacian so it is the exact dual of the face
    /// gradient.
    pub fn hminus1(&self, values: &[f64]) -> HMinus1 {
        let grid = &self.grid;
        let mean = values.iter().sum::<f64>() / grid.len() as f64;
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        let acc: f64 = data
            .iter()
            .zip(&self.inv_kappa2)
            .map(|(c, w)| c.norm_sqr() * w)
            .sum();
        let seminorm = (acc * grid.cell_volume() / grid.len() as f64).sqrt();
        HMinus1 { seminorm, mean }
    }

    /// Periodic Gaussian smoothing with standard deviation `width` (length units).
    pub fn mollify(&self, f: &Field, width: f64) -> Result<Field, GridError> {
        let grid = self.grid;
        let h = grid.h();
        if !(width >= h) {
            return Err(GridError::MollifierWidth { width, h });
        }
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        let base = 2.0 * PI / grid.length();
        for (idx, c) in data.iter_mut().enumerate() {
            let k = wave_indices(&grid, idx);
            let k2: f64 = k[..grid.dim()].iter().map(|kk| (base * kk).powi(2)).sum();
            *c *= (-0.5 * k2 * width * width).exp();
        }
        self.transform(&mut data, true);
        let scale = 1.0 / grid.len() as f64;
        Field::new(grid, data.iter().map(|c| c.re * scale).collect())
    }
}

fn wave_indices(grid: &Grid, index: usize) -> [f64; 2] {
    let n = grid.cells();
    let signed = |k: usize| {
        if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    };
    let [i0, i1] = grid.unravel(index);
    [signed(i0), if grid.dim() == 2 { signed(i1) } else { 0.0 }]
}

/// Homogeneous `Ḣ⁻¹` seminorm of the mean-free part of `f`; see [`Spectral::hminus1`].
pub fn hminus1_norm(f: &Field) -> HMinus1 {
    Spectral::new(*f.grid()).hminus1(f.values())
}

/// Periodic Gaussian smoothing; see [`Spectral::mollify`].
pub fn mollify(f: &Field, width: f64) -> Result<Field, GridError> {
    Spectral::new(*f.grid()).mollify(f, width)
}
