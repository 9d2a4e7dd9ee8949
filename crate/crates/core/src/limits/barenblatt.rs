use rayon::prelude::*;

use super::{Aborted, LimitsError, Tabular};
use crate::energy::EnergyPair;
use crate::grid::Grid;
use crate::solver::{run, Barenblatt, InitialData, SimConfig, SolverError};

/// Porous-medium run started from the self-similar profile at `t0` and
/// compared with it at `t_end` (both absolute times of the profile).
#[derive(Debug, Clone, PartialEq)]
pub struct BarenblattSpec {
    pub m: f64,
    pub dim: usize,
    pub grids: Vec<usize>,
    pub t0: f64,
    pub t_end: f64,
    pub length: f64,
    pub c: f64,
}

impl BarenblattSpec {
    /// One-dimensional, `t0 = 0.1`, `L = 8`, `C = 1`.
    pub fn new(m: f64, grids: Vec<usize>, t_end: f64) -> Self {
        Self {
            m,
            dim: 1,
            grids,
            t0: 0.1,
            t_end,
            length: 8.0,
            c: 1.0,
        }
    }

    fn profile(&self) -> Result<Barenblatt, LimitsError> {
        Ok(Barenblatt::new(self.m, self.dim, self.c)?)
    }

    /// Smallest domain keeping the support at `t_end` off the boundary band.
    pub fn required_length(&self) -> Result<f64, LimitsError> {
        Ok(self.profile()?.radius(self.t_end) / 0.45)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattRow {
    pub cells: usize,
    /// `‖ρ_h(T) − ρ_B(T)‖₁ / mass`.
    pub l1_error: f64,
    /// `log₂(err_N / err_2N)`; `NaN` when the next grid is not `2N`.
    pub order: f64,
    /// `|mass_h − mass_B| / mass_B`.
    pub mass_gap: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarenblattTable {
    pub rows: Vec<BarenblattRow>,
    pub aborted: Option<Aborted>,
}

impl Tabular for BarenblattTable {
    fn columns(&self) -> Vec<&'static str> {
        vec!["cells", "l1_error", "order", "mass_gap"]
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| vec![r.cells as f64, r.l1_error, r.order, r.mass_gap])
            .collect()
    }

    fn plot_columns(&self) -> Vec<usize> {
        vec![0, 1]
    }
}

pub fn barenblatt_validation(spec: &BarenblattSpec) -> Result<BarenblattTable, LimitsError> {
    let profile = spec.profile()?;
    if !(spec.t0 > 0.0 && spec.t_end >= spec.t0) {
        return Err(LimitsError::Invalid(format!(
            "need 0 < t0 <= t_end, got t0 = {} and t_end = {}",
            spec.t0, spec.t_end
        )));
    }
    if spec.grids.is_empty() || spec.grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LimitsError::Invalid("grid sizes must be nonempty and ascending".into()));
    }
    let required = spec.required_length()?;
    if spec.length < required {
        return Err(LimitsError::DomainTooSmall {
            radius: profile.radius(spec.t_end),
            t: spec.t_end,
            required,
            length: spec.length,
        });
    }
    let energy = EnergyPair::power(spec.m).map_err(SolverError::from)?;
    let mid = 0.5 * spec.length;
    let center = [mid, if spec.dim == 2 { mid } else { 0.0 }];
    let mut cfgs = Vec::with_capacity(spec.grids.len());
    for &n in &spec.grids {
        let grid = Grid::new(spec.dim, n, spec.length).map_err(SolverError::from)?;
        let rho = profile.cell_averages(&grid, spec.t0, center);
        let mut c = SimConfig::new(energy.clone(), InitialData::single(rho));
        c.t_end = spec.t_end - spec.t0;
        c.validate()?;
        cfgs.push(c);
    }
    let runs: Vec<_> = cfgs.par_iter().map(run).collect();
    let mut rows: Vec<BarenblattRow> = Vec::new();
    let mut aborted = None;
    for ((&n, cfg), r) in spec.grids.iter().zip(&cfgs).zip(runs) {
        let traj = match r {
            Ok(t) if t.completed() => t,
            other => {
                let error = match other {
                    Ok(t) => t.abort.expect("not completed"),
                    Err(e) => e,
                };
                aborted = Some(Aborted {
                    member: format!("N = {n}"),
                    error,
                });
                break;
            }
        };
        let exact = profile.cell_averages(&cfg.grid, spec.t_end, center);
        let num = traj.last().rho();
        let dv = cfg.grid.cell_volume();
        let mass = profile.mass();
        let diff: f64 = num.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).sum();
        let num_mass: f64 = num.values().iter().sum::<f64>() * dv;
        rows.push(BarenblattRow {
            cells: n,
            l1_error: diff * dv / mass,
            order: f64::NAN,
            mass_gap: (num_mass - mass).abs() / mass,
            steps: traj.steps,
        });
    }
    for k in 1..rows.len() {
        if rows[k].cells == 2 * rows[k - 1].cells {
            rows[k - 1].order = (rows[k - 1].l1_error / rows[k].l1_error).log2();
        }
    }
    Ok(BarenblattTable { rows, aborted })
}
