use std::f64::consts::PI;

use crate::grid::{divergence, FaceFlux, Grid};

/// Prescribed drift `V`, shared by both species.
#[derive(Debug, Clone, PartialEq)]
pub enum Velocity {
    Zero,
    Constant([f64; 2]),
    /// Periodic rotation-like field with angular rate `omega` about `center`.
    ///
    /// In two dimensions `V = ωL/2π (−sin 2π(y−y_c)/L, sin 2π(x−x_c)/L)`,
    /// which is divergence free and is rigid rotation near the centre. In one
    /// dimension only the first component survives,
    /// `V = ωL/2π sin 2π(x−x_c)/L`, with `∇·V = ω cos 2π(x−x_c)/L`.
    Rotating { omega: f64, center: [f64; 2] },
    /// Face values read from disk.
    Tabulated(FaceFlux),
}

impl Velocity {
    /// Samples `V·e_k` at the centre of every face.
    pub fn faces(&self, grid: &Grid) -> FaceFlux {
        let h = grid.h();
        let l = grid.length();
        let d = grid.dim();
        let mut axes = vec![vec![0.0; grid.len()]; d];
        match self {
            Velocity::Zero => {}
            Velocity::Constant(v) => {
                for (k, axis) in axes.iter_mut().enumerate() {
                    axis.iter_mut().for_each(|x| *x = v[k]);
                }
            }
            Velocity::Rotating { omega, center } => {
                let amp = omega * l / (2.0 * PI);
                for (k, axis) in axes.iter_mut().enumerate() {
                    for (i, v) in axis.iter_mut().enumerate() {
                        let mut x = grid.center(i);
                        x[k] += 0.5 * h;
                        *v = match (d, k) {
                            (1, _) => amp * (2.0 * PI * (x[0] - center[0]) / l).sin(),
                            (_, 0) => -amp * (2.0 * PI * (x[1] - center[1]) / l).sin(),
                            _ => amp * (2.0 * PI * (x[0] - center[0]) / l).sin(),
                        };
                    }
                }
            }
            Velocity::Tabulated(flux) => return flux.clone(),
        }
        FaceFlux::new(*grid, axes).expect("face arrays sized from the grid")
    }

    /// Closed-form `sup |∇·V|`, or `None` for tabulated data.
    pub fn analytic_div_bound(&self, grid: &Grid) -> Option<f64> {
        match self {
            Velocity::Zero | Velocity::Constant(_) => Some(0.0),
            Velocity::Rotating { omega, .. } => Some(if grid.dim() == 1 { omega.abs() } else { 0.0 }),
            Velocity::Tabulated(_) => None,
        }
    }

    /// The larger of the closed-form bound and the discrete divergence maximum.
    pub fn div_bound(&self, grid: &Grid) -> f64 {
        let discrete = divergence(&self.faces(grid))
            .values()
            .iter()
            .fold(0.0, |m: f64, v| m.max(v.abs()));
        self.analytic_div_bound(grid).unwrap_or(0.0).max(discrete)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Velocity::Zero)
    }
}
