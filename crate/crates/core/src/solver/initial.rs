//! Canonical initial data.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::grid::snapshot::{read_field, SnapshotError};
use super::InitialData;
use crate::grid::{Field, Grid, GridError};

/// How one field is generated at `t = 0`. Centres default to the domain centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Zero {},
    Uniform {
        value: f64,
    },
    /// `A exp(−|x−c|²/2σ²)`, cut off beyond `4σ`.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Two Gaussians a distance `separation` apart along the first axis.
    TwoBump {
        amplitude: f64,
        width: f64,
        separation: f64,
    },
    /// Cell averages of the self-similar porous-medium profile at time `t0`.
    Barenblatt {
        m: f64,
        t0: f64,
        #[serde(default = "one")]
        c: f64,
    },
    Disk {
        value: f64,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    File {
        path: PathBuf,
    },
}

/// Generators for the three fields, rebuilt on any grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpecs {
    pub rho1: InitialSpec,
    #[serde(default = "zero_spec")]
    pub rho2: InitialSpec,
    #[serde(default = "unit_spec")]
    pub n: InitialSpec,
}

impl InitialSpecs {
    /// Species 1 only, unit nutrient.
    pub fn single(rho1: InitialSpec) -> Self {
        Self {
            rho1,
            rho2: zero_spec(),
            n: unit_spec(),
        }
    }

    pub fn build(&self, grid: &Grid) -> Result<InitialData, InitialError> {
        Ok(InitialData {
            rho1: self.rho1.build(grid)?,
            rho2: self.rho2.build(grid)?,
            n: self.n.build(grid)?,
        })
    }
}

fn zero_spec() -> InitialSpec {
    InitialSpec::Zero {}
}

fn unit_spec() -> InitialSpec {
    InitialSpec::Uniform { value: 1.0 }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, thiserror::Error)]
pub enum InitialError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("initial data file {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: SnapshotError,
    },
    #[error("initial data file {path} has grid {found:?}, config has {expected:?}")]
    GridMismatch { path: PathBuf, found: Grid, expected: Grid },
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn resolve_center(grid: &Grid, center: &Option<Vec<f64>>) -> Result<[f64; 2], InitialError> {
    let mid = 0.5 * grid.length();
    match center {
        None => Ok([mid, if grid.dim() == 2 { mid } else { 0.0 }]),
        Some(c) if c.len() == grid.dim() => Ok([c[0], c.get(1).copied().unwrap_or(0.0)]),
        Some(c) => Err(InitialError::Parameter(format!(
            "center has {} components, grid has dimension {}",
            c.len(),
            grid.dim()
        ))),
    }
}

fn dist2(grid: &Grid, x: [f64; 2], c: [f64; 2]) -> f64 {
    (0..grid.dim()).map(|k| (x[k] - c[k]).powi(2)).sum()
}

fn positive(name: &str, v: f64) -> Result<(), InitialError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(InitialError::Parameter(format!("{name} must be positive, got {v}")))
    }
}

impl InitialSpec {
    pub fn build(&self, grid: &Grid) -> Result<Field, InitialError> {
        let gaussian = |amp: f64, w: f64, c: [f64; 2], x: [f64; 2]| {
            let r2 = dist2(grid, x, c);
            if r2 > 16.0 * w * w {
                0.0
            } else {
                amp * (-0.5 * r2 / (w * w)).exp()
            }
        };
        match self {
            InitialSpec::Zero {} => Ok(Field::zeros(*grid)),
            InitialSpec::Uniform { value } => Ok(Field::constant(*grid, *value)?),
            InitialSpec::Gaussian {
                amplitude,
                width,
                center,
            } => {
                positive("width", *width)?;
                let c = resolve_center(grid, center)?;
                Ok(Field::from_fn(*grid, |x| gaussian(*amplitude, *width, c, x))?)
            }
            InitialSpec::TwoBump {
                amplitude,
                width,
                separation,
            } => {
                positive("width", *width)?;
                let mid = resolve_center(grid, &None)?;
                let a = [mid[0] - 0.5 * separation, mid[1]];
                let b = [mid[0] + 0.5 * separation, mid[1]];
                Ok(Field::from_fn(*grid, |x| {
                    gaussian(*amplitude, *width, a, x) + gaussian(*amplitude, *width, b, x)
                })?)
            }
            InitialSpec::Barenblatt { m, t0, c } => {
                let profile = Barenblatt::new(*m, grid.dim(), *c)?;
                positive("t0", *t0)?;
                let center = resolve_center(grid, &None)?;
                Ok(profile.cell_averages(grid, *t0, center))
            }
            InitialSpec::Disk {
                value,
                radius,
                center,
            } => {
                positive("radius", *radius)?;
                let c = resolve_center(grid, center)?;
                Ok(Field::from_fn(*grid, |x| {
                    if dist2(grid, x, c) <= radius * radius {
                        *value
                    } else {
                        0.0
                    }
                })?)
            }
            InitialSpec::File { path } => {
                let (field, _) = read_field(path).map_err(|source| InitialError::File {
                    path: path.clone(),
                    source,
                })?;
                if field.grid() != grid {
                    return Err(InitialError::GridMismatch {
                        path: path.clone(),
                        found: *field.grid(),
                        expected: *grid,
                    });
                }
                Ok(field)
            }
        }
    }
}

/// Self-similar solution of `∂_t ρ = Δ(ρ^m)` in dimension `d`:
/// `ρ(x, t) = t^{−α} (C − k |x|² t^{−2α/d})₊^{1/(m−1)}` with
/// `α = d / (d(m−1) + 2)` and `k = α(m−1) / (2md)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barenblatt {
    pub m: f64,
    pub d: usize,
    pub c: f64,
}

impl Barenblatt {
    pub fn new(m: f64, d: usize, c: f64) -> Result<Self, InitialError> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(InitialError::Parameter(format!("barenblatt needs m > 1, got {m}")));
        }
        positive("c", c)?;
        if !(1..=2).contains(&d) {
            return Err(InitialError::Parameter(format!("dimension {d}")));
        }
        Ok(Self { m, d, c })
    }

    pub fn alpha(&self) -> f64 {
        let d = self.d as f64;
        d / (d * (self.m - 1.0) + 2.0)
    }

    pub fn k(&self) -> f64 {
        self.alpha() * (self.m - 1.0) / (2.0 * self.m * self.d as f64)
    }

    /// Radius of the support at time `t`.
    pub fn radius(&self, t: f64) -> f64 {
        (self.c / self.k()).sqrt() * t.powf(self.alpha() / self.d as f64)
    }

    pub fn value(&self, r: f64, t: f64) -> f64 {
        let a = self.alpha();
        let s = r * t.powf(-a / self.d as f64);
        t.powf(-a) * (self.c - self.k() * s * s).max(0.0).powf(1.0 / (self.m - 1.0))
    }

    /// `∫ ρ dx`, constant in time.
    pub fn mass(&self) -> f64 {
        let big_r = (self.c / self.k()).sqrt();
        match self.d {
            1 => self.slab_integral(self.c, -big_r, big_r),
            _ => {
                let s = 1.0 / (self.m - 1.0);
                // ∫ (C − k r²)^s 2πr dr = π C^{s+1} / (k (s+1))
                std::f64::consts::PI * self.c.powf(s + 1.0) / (self.k() * (s + 1.0))
            }
        }
    }

    /// `∫_a^b (c0 − k y²)₊^s dy` via `y = R sin θ`, which turns the edge
    /// singularity into the smooth integrand `c0^s cos^{2s+1} θ R`.
    fn slab_integral(&self, c0: f64, a: f64, b: f64) -> f64 {
        if c0 <= 0.0 {
            return 0.0;
        }
        let s = 1.0 / (self.m - 1.0);
        let r = (c0 / self.k()).sqrt();
        let (a, b) = (a.max(-r), b.min(r));
        if a >= b {
            return 0.0;
        }
        let (ta, tb) = ((a / r).clamp(-1.0, 1.0).asin(), (b / r).clamp(-1.0, 1.0).asin());
        c0.powf(s) * r * gauss(ta, tb, |th| th.cos().max(0.0).powf(2.0 * s + 1.0))
    }

    /// Exact-to-quadrature cell averages at time `t` about `center`.
    pub fn cell_averages(&self, grid: &Grid, t: f64, center: [f64; 2]) -> Field {
        let h = grid.h();
        let a = self.alpha();
        let beta = a / self.d as f64;
        let stretch = t.powf(-beta);
        // in similarity variables y = x t^{−β}: ρ = t^{−α} F(y)
        let scale = t.powf(-a) / (h * stretch).powi(self.d as i32);
        let lo = |i: usize, k: usize| (((i as f64) * h) - center[k]) * stretch;
        let hi = |i: usize, k: usize| (((i + 1) as f64) * h - center[k]) * stretch;
        let values = (0..grid.len())
            .map(|idx| {
                let [i0, i1] = grid.unravel(idx);
                let integral = match self.d {
                    1 => self.slab_integral(self.c, lo(i0, 0), hi(i0, 0)),
                    _ => {
                        let (xa, xb) = (lo(i0, 0), hi(i0, 0));
                        let (ya, yb) = (lo(i1, 1), hi(i1, 1));
                        let r = (self.c / self.k()).sqrt();
                        let (xa, xb) = (xa.max(-r), xb.min(r));
                        if xa >= xb {
                            0.0
                        } else {
                            let (ta, tb) = ((xa / r).asin(), (xb / r).asin());
                            r * gauss(ta, tb, |th| {
                                let x = r * th.sin();
                                th.cos() * self.slab_integral(self.c - self.k() * x * x, ya, yb)
                            })
                        }
                    }
                };
                scale * integral
            })
            .collect();
        Field::new(*grid, values).expect("profile is finite")
    }
}

// composite 8-point Gauss–Legendre, panels no wider than 0.1
fn gauss(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let panels = ((b - a).abs() / 0.1).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let (lo, hi) = (a + p as f64 * width, a + (p + 1) as f64 * width);
        let c = 0.5 * (lo + hi);
        let r = 0.5 * (hi - lo);
        for (x, w) in X.iter().zip(W) {
            total += w * r * (f(c - r * x) + f(c + r * x));
        }
    }
    total
}
