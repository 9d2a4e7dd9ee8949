//! Explicit conservative finite-volume stepping of the two-species system.
//!
//! Each step computes the total pressure flux `D = −∇_h q` on every face and
//! hands species `i` the share `θ_i D`, with `θ_i = ρ_i/ρ` read from the
//! upwind cell. The two shares add back to `D` bit for bit, so the summed
//! density obeys the scalar equation exactly.

pub mod initial;
mod run;
pub mod sources;
pub mod velocity;

pub use initial::{Barenblatt, InitialError, InitialSpec, InitialSpecs};
pub use run::{run, SnapshotSet, Trajectory};
pub use sources::{CustomSources, Rates, SourceModel, SourceViolation};
pub use velocity::Velocity;

use rayon::prelude::*;
use thiserror::Error;

use crate::energy::{EnergyError, EnergyPair};
use crate::grid::{divergence, FaceFlux, Field, Grid, GridError};

/// Cells below this count are processed serially.
const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("non-finite {field} at cell {index} (t = {t}, step {step}): {dump}")]
    NonFinite {
        t: f64,
        step: usize,
        field: &'static str,
        index: usize,
        dump: String,
    },
    #[error(
        "density {value} reached a_max = {a_max} at cell {index} (t = {t}); \
         use a larger exponent or smaller data for more headroom"
    )]
    Saturated {
        t: f64,
        index: usize,
        value: f64,
        a_max: f64,
    },
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Resolved initial fields.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub rho1: Field,
    pub rho2: Field,
    pub n: Field,
}

impl InitialData {
    /// Species 1 only, unit nutrient.
    pub fn single(rho1: Field) -> Self {
        let grid = *rho1.grid();
        Self {
            rho1,
            rho2: Field::zeros(grid),
            n: Field::constant(grid, 1.0).expect("finite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub energy: EnergyPair,
    /// Viscosity `γ`.
    pub gamma: f64,
    /// Nutrient diffusivity `α`.
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub velocity: Velocity,
    pub sources: SourceModel,
    /// Lower clamp for `p` where `(z*)⁻¹` is unbounded below.
    pub p_min: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub snapshot_every: f64,
    pub initial: InitialData,
}

impl SimConfig {
    /// Zero drift, no sources, no viscosity, `t_end = 0`, safety `0.9`.
    pub fn new(energy: EnergyPair, initial: InitialData) -> Self {
        let grid = *initial.rho1.grid();
        Self {
            grid,
            energy,
            gamma: 0.0,
            alpha: 0.0,
            c1: 0.0,
            c2: 0.0,
            velocity: Velocity::Zero,
            sources: SourceModel::Off,
            p_min: -10.0,
            t_end: 0.0,
            cfl_safety: 0.9,
            snapshot_every: f64::INFINITY,
            initial,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Config(m));
        if !self.energy.has_single_valued_eprime() {
            return bad("energy has a multivalued derivative; the pressure map q = e'(rho) is undefined".into());
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("c1", self.c1),
            ("c2", self.c2),
            ("t_end", self.t_end),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if !(self.snapshot_every > 0.0) {
            return bad(format!("snapshot_every must be positive, got {}", self.snapshot_every));
        }
        if !self.p_min.is_finite() {
            return bad("p_min must be finite".into());
        }
        let init = &self.initial;
        for (name, f) in [("rho1", &init.rho1), ("rho2", &init.rho2), ("n", &init.n)] {
            if *f.grid() != self.grid {
                return bad(format!("initial {name} lives on a different grid"));
            }
            if f.min() < 0.0 {
                return bad(format!("initial {name} has negative values (min {})", f.min()));
            }
        }
        let rho_max = init.rho1.zip_map(&init.rho2, |a, b| a + b)?.max();
        let a_max = self.energy.a_max();
        if rho_max >= a_max {
            return bad(format!("initial density max {rho_max} is not below a_max = {a_max}"));
        }
        if let Velocity::Tabulated(f) = &self.velocity {
            if *f.grid() != self.grid {
                return bad("tabulated velocity lives on a different grid".into());
            }
        }
        if let SourceModel::Homeostatic { g1, p_h, d1, d2 } = self.sources {
            if [g1, d1, d2].iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(p_h > 0.0) {
                return bad("homeostatic parameters need g1, d1, d2 >= 0 and p_h > 0".into());
            }
        }
        let violations = self
            .sources
            .check((self.p_floor(), self.p_floor().max(0.0) + 100.0), init.n.max(), 65);
        if let Some(v) = violations.first() {
            return bad(format!("source model violates its structural assumptions: {v:?}"));
        }
        Ok(())
    }

    /// Smallest pressure the sources can see.
    pub fn p_floor(&self) -> f64 {
        match self.energy.zstarinv(0.0) {
            Ok(p) => p.max(self.p_min),
            Err(_) => self.p_min,
        }
    }

    /// `B` for the nutrient range of the initial data (nutrient never exceeds its initial max).
    pub fn source_bound(&self) -> f64 {
        self.sources.bound(self.p_floor(), self.initial.n.max())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub rho1: Field,
    pub rho2: Field,
    pub n: Field,
}

impl SimState {
    pub fn initial(cfg: &SimConfig) -> Self {
        Self {
            t: 0.0,
            rho1: cfg.initial.rho1.clone(),
            rho2: cfg.initial.rho2.clone(),
            n: cfg.initial.n.clone(),
        }
    }

    pub fn rho(&self) -> Field {
        self.rho1
            .zip_map(&self.rho2, |a, b| a + b)
            .expect("species share a grid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields {
    pub rho: Field,
    pub q: Field,
    pub p: Field,
    pub mu: Field,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    /// Species mass added by clipping negative undershoots.
    pub clipped_mass: f64,
    pub clipped_nutrient: f64,
}

/// Per-cell quantities of one state.
pub(crate) struct Work {
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

impl Work {
    pub fn mu(&self, i: usize) -> f64 {
        self.s1[i] + self.s2[i]
    }
}

fn map_cells<T: Send>(len: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if len >= PAR_THRESHOLD {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

/// Precomputed configuration-dependent data for repeated stepping.
pub struct Stepper<'a> {
    pub cfg: &'a SimConfig,
    pub v_faces: FaceFlux,
    /// Discrete `∇_h·V`.
    pub div_v: Field,
    pub div_v_bound: f64,
    pub v_max: f64,
    pub source_bound: f64,
    p_floor: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(cfg: &'a SimConfig) -> Result<Self, SolverError> {
        cfg.validate()?;
        let v_faces = cfg.velocity.faces(&cfg.grid);
        let div_v = divergence(&v_faces);
        Ok(Self {
            div_v_bound: cfg.velocity.div_bound(&cfg.grid),
            v_max: v_faces.max_abs(),
            v_faces,
            div_v,
            source_bound: cfg.source_bound(),
            p_floor: cfg.p_floor(),
            cfg,
        })
    }

    pub(crate) fn work(&self, s: &SimState) -> Result<Work, SolverError> {
        let cfg = self.cfg;
        let len = cfg.grid.len();
        let (r1, r2, nv) = (s.rho1.values(), s.rho2.values(), s.n.values());
        let cells: Vec<Result<[f64; 5], EnergyError>> = map_cells(len, |i| {
            let rho = r1[i] + r2[i];
            if rho <= 0.0 {
                return Ok([rho, 0.0, 0.0, 0.0, 0.0]);
            }
            let q = cfg.energy.eprime(rho)?;
            let p = if q > 0.0 {
                cfg.energy.zstarinv(q)?.max(self.p_floor)
            } else {
                0.0
            };
            if cfg.sources.is_off() {
                return Ok([rho, q, p, 0.0, 0.0]);
            }
            let f = cfg.sources.rates(p, nv[i]);
            let s1 = r1[i] * f[0][0] + r2[i] * f[0][1];
            let s2 = r1[i] * f[1][0] + r2[i] * f[1][1];
            Ok([rho, q, p, s1, s2])
        });
        let mut w = Work {
            rho: Vec::with_capacity(len),
            q: Vec::with_capacity(len),
            p: Vec::with_capacity(len),
            s1: Vec::with_capacity(len),
            s2: Vec::with_capacity(len),
        };
        for (i, c) in cells.into_iter().enumerate() {
            let c = c.map_err(|e| match e {
                EnergyError::OutOfDomain(v) | EnergyError::Multivalued(v) => SolverError::Saturated {
                    t: s.t,
                    index: i,
                    value: v,
                    a_max: cfg.energy.a_max(),
                },
                other => other.into(),
            })?;
            w.rho.push(c[0]);
            w.q.push(c[1]);
            w.p.push(c[2]);
            w.s1.push(c[3]);
            w.s2.push(c[4]);
        }
        Ok(w)
    }

    pub fn derived_fields(&self, s: &SimState) -> Result<DerivedFields, SolverError> {
        let w = self.work(s)?;
        let g = self.cfg.grid;
        let mu = (0..g.len()).map(|i| w.mu(i)).collect();
        Ok(DerivedFields {
            rho: Field::from_raw(g, w.rho),
            q: Field::from_raw(g, w.q),
            p: Field::from_raw(g, w.p),
            mu: Field::from_raw(g, mu),
        })
    }

    /// Largest stable step for the state behind `w`.
    pub(crate) fn cfl_from(&self, w: &Work, s: &SimState) -> f64 {
        let cfg = self.cfg;
        let g = cfg.grid;
        let (h, d) = (g.h(), g.dim() as f64);
        let mut e2: f64 = 0.0;
        for &r in &w.rho {
            let v = cfg.energy.eprime2(r);
            if v.is_finite() {
                e2 = e2.max(v);
            }
        }
        // secant slopes cover energies whose e'' blows up at vacuum
        for k in 0..g.dim() {
            for i in 0..g.len() {
                let j = g.neighbor(i, k, true);
                let dr = w.rho[j] - w.rho[i];
                if dr != 0.0 {
                    e2 = e2.max((w.q[j] - w.q[i]) / dr);
                }
            }
        }
        let r_transport = 2.0 * d * (e2 + cfg.gamma) / (h * h) + 2.0 * d * self.v_max / h;
        let consumption = s
            .rho1
            .values()
            .iter()
            .zip(s.rho2.values())
            .fold(0.0, |m: f64, (a, b)| m.max(cfg.c1 * a + cfg.c2 * b));
        let r_nutrient = 2.0 * d * cfg.alpha / (h * h) + consumption;
        let r_source = 2.0 * self.source_bound;
        let dt = [r_transport, r_nutrient, r_source]
            .into_iter()
            .filter(|r| *r > 0.0)
            .map(|r| 1.0 / r)
            .fold(f64::INFINITY, f64::min);
        cfg.cfl_safety * if dt.is_finite() { dt } else { h / 1e-14 }
    }

    pub fn cfl_dt(&self, s: &SimState) -> Result<f64, SolverError> {
        Ok(self.cfl_from(&self.work(s)?, s))
    }

    pub fn step(&self, s: &SimState, dt: f64) -> Result<(SimState, StepReport), SolverError> {
        let w = self.work(s)?;
        self.step_from(&w, s, dt, 0)
    }

    pub(crate) fn step_from(
        &self,
        w: &Work,
        s: &SimState,
        dt: f64,
        step_index: usize,
    ) -> Result<(SimState, StepReport), SolverError> {
        let cfg = self.cfg;
        let g = cfg.grid;
        let (len, h, dv) = (g.len(), g.h(), g.cell_volume());
        let (r1, r2, nv) = (s.rho1.values(), s.rho2.values(), s.n.values());
        let gamma = cfg.gamma;
        let mut report = StepReport::default();

        let mut j1 = vec![vec![0.0; len]; g.dim()];
        let mut j2 = vec![vec![0.0; len]; g.dim()];
        for k in 0..g.dim() {
            let vk = self.v_faces.axis(k);
            for i in 0..len {
                let j = g.neighbor(i, k, true);
                let d_tot = -(w.q[j] - w.q[i]) / h;
                let up = if d_tot >= 0.0 { i } else { j };
                let theta = if w.rho[up] > 0.0 { r1[up] / w.rho[up] } else { 0.0 };
                let share1 = theta * d_tot;
                let share2 = d_tot - share1;
                let v = vk[i];
                let (a1, a2) = if v >= 0.0 { (r1[i], r2[i]) } else { (r1[j], r2[j]) };
                j1[k][i] = share1 - gamma * (r1[j] - r1[i]) / h + a1 * v;
                j2[k][i] = share2 - gamma * (r2[j] - r2[i]) / h + a2 * v;
            }
        }

        let update = |rho: &[f64], flux: &[Vec<f64>], src: &[f64]| -> Vec<f64> {
            (0..len)
                .map(|i| {
                    let mut div = 0.0;
                    for (k, axis) in flux.iter().enumerate() {
                        div += (axis[i] - axis[g.neighbor(i, k, false)]) / h;
                    }
                    rho[i] - dt * div + dt * src[i]
                })
                .collect()
        };
        let mut n1 = update(r1, &j1, &w.s1);
        let mut n2 = update(r2, &j2, &w.s2);

        let mut nn: Vec<f64> = (0..len)
            .map(|i| {
                let mut lap = 0.0;
                if cfg.alpha > 0.0 {
                    for k in 0..g.dim() {
                        lap += nv[g.neighbor(i, k, true)] - 2.0 * nv[i] + nv[g.neighbor(i, k, false)];
                    }
                    lap *= cfg.alpha / (h * h);
                }
                nv[i] + dt * (lap - nv[i] * (cfg.c1 * r1[i] + cfg.c2 * r2[i]))
            })
            .collect();

        let t = s.t + dt;
        for (name, vals) in [("rho1", &n1), ("rho2", &n2), ("n", &nn)] {
            if let Some(index) = vals.iter().position(|v| !v.is_finite()) {
                return Err(SolverError::NonFinite {
                    t,
                    step: step_index,
                    field: name,
                    index,
                    dump: format!(
                        "before: rho1 {} rho2 {} n {} q {} p {}",
                        r1[index], r2[index], nv[index], w.q[index], w.p[index]
                    ),
                });
            }
        }
        for v in n1.iter_mut().chain(n2.iter_mut()) {
            if *v < 0.0 {
                report.clipped_mass -= *v * dv;
                *v = 0.0;
            }
        }
        for v in nn.iter_mut() {
            if *v < 0.0 {
                report.clipped_nutrient -= *v * dv;
                *v = 0.0;
            }
        }
        let a_max = cfg.energy.a_max();
        if a_max.is_finite() {
            if let Some(index) = (0..len).find(|&i| n1[i] + n2[i] >= a_max) {
                return Err(SolverError::Saturated {
                    t,
                    index,
                    value: n1[index] + n2[index],
                    a_max,
                });
            }
        }
        Ok((
            SimState {
                t,
                rho1: Field::from_raw(g, n1),
                rho2: Field::from_raw(g, n2),
                n: Field::from_raw(g, nn),
            },
            report,
        ))
    }
}

pub fn derived_fields(s: &SimState, cfg: &SimConfig) -> Result<DerivedFields, SolverError> {
    Stepper::new(cfg)?.derived_fields(s)
}

pub fn cfl_dt(s: &SimState, cfg: &SimConfig) -> Result<f64, SolverError> {
    Stepper::new(cfg)?.cfl_dt(s)
}

pub fn step(s: &SimState, cfg: &SimConfig, dt: f64) -> Result<(SimState, StepReport), SolverError> {
    Stepper::new(cfg)?.step(s, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;

    fn grid1(n: usize, l: f64) -> Grid {
        Grid::new(1, n, l).unwrap()
    }

    fn uniform_cfg(value: f64, energy: EnergyPair) -> SimConfig {
        let g = grid1(64, 1.0);
        SimConfig::new(energy, InitialData::single(Field::constant(g, value).unwrap()))
    }

    #[test]
    fn derived_fields_closed_forms() {
        let cfg = uniform_cfg(2.0, EnergyPair::power(2.0).unwrap());
        let d = derived_fields(&SimState::initial(&cfg), &cfg).unwrap();
        assert!(d.q.values().iter().all(|v| (v - 4.0).abs() < 1e-12));
        assert!(d.p.values().iter().all(|v| (v - 3.0).abs() < 1e-12));

        let cfg = uniform_cfg(0.0, EnergyPair::power(2.0).unwrap());
        let d = derived_fields(&SimState::initial(&cfg), &cfg).unwrap();
        for f in [&d.q, &d.p, &d.mu] {
            assert!(f.values().iter().all(|v| *v == 0.0));
        }

        let e = std::f64::consts::E;
        let cfg = uniform_cfg(e, EnergyPair::entropy());
        let d = derived_fields(&SimState::initial(&cfg), &cfg).unwrap();
        assert!(d.q.values().iter().all(|v| (v - e).abs() < 1e-12));
        assert!(d.p.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn multivalued_energy_is_a_config_error() {
        let cfg = uniform_cfg(0.5, EnergyPair::incompressible());
        assert!(matches!(Stepper::new(&cfg), Err(SolverError::Config(_))));
    }

    #[test]
    fn cfl_examples() {
        let mut cfg = uniform_cfg(1.0, EnergyPair::power(2.0).unwrap());
        cfg.sources = SourceModel::Homeostatic {
            g1: 1.0,
            p_h: 1e9,
            d1: 0.0,
            d2: 0.0,
        };
        // p_floor = -1 makes B = 1 + 1e-9
        let h = cfg.grid.h();
        let dt = cfl_dt(&SimState::initial(&cfg), &cfg).unwrap();
        assert!((dt - 0.9 * h * h / 4.0).abs() < 1e-15);

        let cfg0 = uniform_cfg(0.0, EnergyPair::power(2.0).unwrap());
        let mut cfg0 = cfg0;
        cfg0.sources = cfg.sources.clone();
        let dt = cfl_dt(&SimState::initial(&cfg0), &cfg0).unwrap();
        assert!((dt - 0.9 / (2.0 * cfg0.source_bound())).abs() < 1e-12);

        let mut cfgv = uniform_cfg(1.0, EnergyPair::power(2.0).unwrap());
        cfgv.gamma = 1e4;
        let dt = cfl_dt(&SimState::initial(&cfgv), &cfgv).unwrap();
        let approx = 0.9 * h * h / (2.0 * 1e4);
        assert!((dt - approx).abs() / approx < 1e-3);
    }

    fn bump(n: usize) -> SimConfig {
        let g = grid1(n, 4.0);
        let rho = InitialSpec::Gaussian {
            amplitude: 1.0,
            width: 0.3,
            center: None,
        }
        .build(&g)
        .unwrap();
        SimConfig::new(EnergyPair::power(2.0).unwrap(), InitialData::single(rho))
    }

    #[test]
    fn pme_step_conserves_mass_and_keeps_rho2_zero() {
        let cfg = bump(128);
        let st = Stepper::new(&cfg).unwrap();
        let mut s = SimState::initial(&cfg);
        let m0 = integrate(&s.rho());
        for _ in 0..200 {
            let dt = st.cfl_dt(&s).unwrap();
            s = st.step(&s, dt).unwrap().0;
        }
        assert!((integrate(&s.rho()) - m0).abs() <= 1e-12 * m0 * 200.0);
        assert!(s.rho2.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn saturation_aborts() {
        let g = grid1(16, 1.0);
        let (a, z) = (vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 0.5]);
        let energy = EnergyPair::tabulated(a, z).unwrap();
        let mut cfg = SimConfig::new(energy, InitialData::single(Field::constant(g, 0.9).unwrap()));
        cfg.sources = SourceModel::Homeostatic {
            g1: 10.0,
            p_h: 100.0,
            d1: 0.0,
            d2: 0.0,
        };
        let st = Stepper::new(&cfg).unwrap();
        let s = SimState::initial(&cfg);
        assert!(matches!(st.step(&s, 0.05), Err(SolverError::Saturated { .. })));
    }
}
