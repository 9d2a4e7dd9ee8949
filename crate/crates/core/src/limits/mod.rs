//! Parameter sweeps toward the vanishing-viscosity and incompressible
//! limits, validation against the Barenblatt profile, and grid refinement.
//!
//! Every member of a sweep is an independent run; members execute in
//! parallel and are collated in sweep order.

mod barenblatt;

pub use barenblatt::{barenblatt_validation, BarenblattRow, BarenblattSpec, BarenblattTable};

use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics::{dissipation_balance, estimate_monitors, Balance, MonitorReport, DEFAULT_RATIO_CAP};
use crate::energy::EnergyPair;
use crate::grid::{gradient_faces, FaceFlux, Grid};
use crate::solver::{run, InitialError, InitialSpecs, SimConfig, SolverError, Stepper, Trajectory};

#[derive(Debug, Error)]
pub enum LimitsError {
    #[error("invalid study: {0}")]
    Invalid(String),
    #[error("support reaches radius {radius} by t = {t}; the domain needs length >= {required} (have {length})")]
    DomainTooSmall {
        radius: f64,
        t: f64,
        required: f64,
        length: f64,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Initial(#[from] InitialError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Viscosities in descending order.
    Gamma(Vec<f64>),
    /// Power-law exponents in strictly ascending order.
    Exponent(Vec<f64>),
    /// Cells per axis in ascending order.
    Refinement(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub base: SimConfig,
    /// Needed by refinement, which rebuilds the data on every grid.
    pub initial: Option<InitialSpecs>,
    pub sweep: Sweep,
    /// Comparison time; replaces `base.t_end`.
    pub t: f64,
    /// Shared checkpoints in `(0, t]` used for space-time integrals.
    pub checkpoints: usize,
}

impl StudySpec {
    pub fn new(base: SimConfig, sweep: Sweep, t: f64) -> Self {
        Self {
            base,
            initial: None,
            sweep,
            t,
            checkpoints: 50,
        }
    }

    pub fn validate(&self) -> Result<(), LimitsError> {
        let bad = |m: String| Err(LimitsError::Invalid(m));
        if !(self.t.is_finite() && self.t > 0.0) {
            return bad(format!("comparison time must be positive, got {}", self.t));
        }
        if self.checkpoints == 0 {
            return bad("at least one checkpoint is needed".into());
        }
        match &self.sweep {
            Sweep::Gamma(g) => {
                if g.len() < 3 {
                    return bad(format!("gamma sweep needs at least 3 values, got {}", g.len()));
                }
                if g.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("viscosities must be finite and >= 0".into());
                }
                if g.windows(2).any(|w| w[1] >= w[0]) {
                    return bad("viscosities must be strictly descending".into());
                }
            }
            Sweep::Exponent(m) => {
                if m.len() < 3 {
                    return bad(format!("exponent sweep needs at least 3 values, got {}", m.len()));
                }
                if m.iter().any(|v| !(v.is_finite() && *v > 1.0)) {
                    return bad("exponents must be finite and > 1".into());
                }
                if m.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("exponents must be strictly ascending".into());
                }
            }
            Sweep::Refinement(n) => {
                if n.len() < 2 {
                    return bad("refinement needs at least 2 grids".into());
                }
                if n.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("grid sizes must be strictly ascending".into());
                }
                if self.initial.is_none() {
                    return bad("refinement needs initial-data generators".into());
                }
            }
        }
        Ok(())
    }

    fn member(&self, cfg: SimConfig) -> SimConfig {
        let mut c = cfg;
        c.t_end = self.t;
        c.snapshot_every = self.t / self.checkpoints as f64;
        c
    }
}

/// A sweep member that stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Aborted {
    pub member: String,
    pub error: SolverError,
}

/// Column-oriented view used for CSV and plot output.
pub trait Tabular {
    fn columns(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<f64>>;
    /// Columns written to plot data, as indices into `columns`.
    fn plot_columns(&self) -> Vec<usize> {
        (0..self.columns().len()).collect()
    }
}

/// `∇_h q` at the initial state and every checkpoint.
struct GradHistory {
    times: Vec<f64>,
    grads: Vec<FaceFlux>,
}

fn grad_history(traj: &Trajectory, cfg: &SimConfig) -> Result<GradHistory, SolverError> {
    let stepper = Stepper::new(cfg)?;
    let mut times = Vec::with_capacity(traj.snapshots.len());
    let mut grads = Vec::with_capacity(traj.snapshots.len());
    for s in &traj.snapshots {
        let d = stepper.derived_fields(&s.state())?;
        times.push(s.t);
        grads.push(gradient_faces(&d.q));
    }
    Ok(GradHistory { times, grads })
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `‖∇q_a − ∇q_b‖_{L²(Q_T)}` by the trapezoid rule over shared checkpoints.
fn grad_distance(a: &GradHistory, b: &GradHistory) -> f64 {
    let n = a.times.len().min(b.times.len());
    let sq: Vec<f64> = (0..n)
        .map(|k| {
            a.grads[k]
                .axes()
                .iter()
                .zip(b.grads[k].axes())
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>())
                .sum::<f64>()
                * a.grads[k].grid().cell_volume()
        })
        .collect();
    trapezoid(&a.times[..n], &sq).sqrt()
}

struct Member {
    cfg: SimConfig,
    traj: Trajectory,
    grads: GradHistory,
}

fn run_members(cfgs: Vec<SimConfig>) -> Vec<Result<Member, SolverError>> {
    cfgs.into_par_iter()
        .map(|cfg| {
            let traj = run(&cfg)?;
            let grads = grad_history(&traj, &cfg)?;
            Ok(Member { cfg, traj, grads })
        })
        .collect()
}

fn first_abort(members: &[Result<Member, SolverError>], label: impl Fn(usize) -> String) -> Option<Aborted> {
    members.iter().enumerate().find_map(|(i, m)| match m {
        Err(e) => Some(Aborted {
            member: label(i),
            error: e.clone(),
        }),
        Ok(m) => m.traj.abort.clone().map(|error| Aborted { member: label(i), error }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityRow {
    pub gamma: f64,
    /// `‖∇q_γ − ∇q₀‖_{L²(Q_T)}`.
    pub distance: f64,
    /// `‖∇q_γ‖_{L²(Q_T)}`.
    pub grad_q_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityTable {
    /// Sorted by `γ` descending; rows stop before the first aborted member.
    pub rows: Vec<ViscosityRow>,
    /// `‖∇q₀‖_{L²(Q_T)}` of the inviscid reference.
    pub reference_norm: f64,
    pub aborted: Option<Aborted>,
}

impl Tabular for ViscosityTable {
    fn columns(&self) -> Vec<&'static str> {
        vec!["gamma", "dist", "grad_q_norm"]
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| vec![r.gamma, r.distance, r.grad_q_norm]).collect()
    }

    fn plot_columns(&self) -> Vec<usize> {
        vec![0, 1]
    }
}

fn ledger_grad_norm(traj: &Trajectory) -> f64 {
    let l = &traj.ledger;
    l.integral(l.len() - 1, |r| r.grad_q_sq).sqrt()
}

/// Runs every `γ` of the sweep plus an inviscid reference on the base grid
/// and data, and measures how far each `∇q_γ` sits from `∇q₀`.
pub fn vanishing_viscosity_study(spec: &StudySpec) -> Result<ViscosityTable, LimitsError> {
    spec.validate()?;
    let Sweep::Gamma(gammas) = &spec.sweep else {
        return Err(LimitsError::Invalid("viscosity study needs a gamma sweep".into()));
    };
    let mut list = gammas.clone();
    if *list.last().expect("validated") != 0.0 {
        list.push(0.0);
    }
    let cfgs: Vec<SimConfig> = list
        .iter()
        .map(|&g| {
            let mut c = spec.member(spec.base.clone());
            c.gamma = g;
            c
        })
        .collect();
    for c in &cfgs {
        c.validate()?;
    }
    let members = run_members(cfgs);
    let aborted = first_abort(&members, |i| format!("gamma = {}", list[i]));
    let reference = match members.last().expect("nonempty") {
        Ok(m) if m.traj.completed() => m,
        _ => {
            return Ok(ViscosityTable {
                rows: Vec::new(),
                reference_norm: f64::NAN,
                aborted,
            })
        }
    };
    let mut rows = Vec::new();
    for (g, m) in list.iter().zip(&members) {
        match m {
            Ok(m) if m.traj.completed() => rows.push(ViscosityRow {
                gamma: *g,
                distance: grad_distance(&m.grads, &reference.grads),
                grad_q_norm: ledger_grad_norm(&m.traj),
            }),
            _ => break,
        }
    }
    Ok(ViscosityTable {
        rows,
        reference_norm: ledger_grad_norm(&reference.traj),
        aborted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncompressibleRow {
    pub m: f64,
    /// `sup_{Q_T} (ρ − 1)₊` over every step.
    pub overshoot: f64,
    /// `∫₀ᵀ∫ (1 − ρ)₊ p₊` over checkpoints.
    pub complementarity: f64,
    /// `‖∇q_m − ∇q_{m_prev}‖_{L²(Q_T)}`; `NaN` on the first row.
    pub cauchy: f64,
    pub max_rho: f64,
    /// The sup-norm growth bound held at every step.
    pub linf_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncompressibleTable {
    pub rows: Vec<IncompressibleRow>,
    pub aborted: Option<Aborted>,
}

impl Tabular for IncompressibleTable {
    fn columns(&self) -> Vec<&'static str> {
        vec!["m", "overshoot", "complementarity", "cauchy", "max_rho"]
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| vec![r.m, r.overshoot, r.complementarity, r.cauchy, r.max_rho])
            .collect()
    }
}

fn complementarity(m: &Member) -> Result<f64, SolverError> {
    let stepper = Stepper::new(&m.cfg)?;
    let dv = m.cfg.grid.cell_volume();
    let mut vals = Vec::with_capacity(m.traj.snapshots.len());
    for s in &m.traj.snapshots {
        let d = stepper.derived_fields(&s.state())?;
        let v: f64 = d
            .rho
            .values()
            .iter()
            .zip(d.p.values())
            .map(|(r, p)| (1.0 - r).max(0.0) * p.max(0.0))
            .sum();
        vals.push(v * dv);
    }
    Ok(trapezoid(&m.grads.times, &vals))
}

/// Sweeps the power-law exponent on data bounded by one and tracks the
/// approach to the saturated (Hele-Shaw) regime.
pub fn incompressible_limit_study(spec: &StudySpec) -> Result<IncompressibleTable, LimitsError> {
    spec.validate()?;
    let Sweep::Exponent(ms) = &spec.sweep else {
        return Err(LimitsError::Invalid("incompressible study needs an exponent sweep".into()));
    };
    let init = &spec.base.initial;
    let rho0 = init.rho1.zip_map(&init.rho2, |a, b| a + b).map_err(SolverError::from)?.max();
    if rho0 > 1.0 {
        return Err(LimitsError::Invalid(format!("initial density must be <= 1, max is {rho0}")));
    }
    let mut cfgs = Vec::with_capacity(ms.len());
    for &m in ms {
        let mut c = spec.member(spec.base.clone());
        c.energy = EnergyPair::power(m).map_err(SolverError::from)?;
        c.validate()?;
        cfgs.push(c);
    }
    let members = run_members(cfgs);
    let aborted = first_abort(&members, |i| format!("m = {}", ms[i]));
    let mut rows: Vec<IncompressibleRow> = Vec::new();
    let mut prev: Option<&Member> = None;
    for (&m, member) in ms.iter().zip(&members) {
        let member = match member {
            Ok(x) if x.traj.completed() => x,
            _ => break,
        };
        let last = member.traj.ledger.len() - 1;
        let max_rho = member.traj.ledger.sup(last, |r| r.rho_linf);
        let monitors = estimate_monitors(&member.traj.ledger, &member.cfg, None, DEFAULT_RATIO_CAP)
            .expect("completed run has a ledger");
        rows.push(IncompressibleRow {
            m,
            overshoot: (max_rho - 1.0).max(0.0),
            complementarity: complementarity(member)?,
            cauchy: prev.map_or(f64::NAN, |p| grad_distance(&member.grads, &p.grads)),
            max_rho,
            linf_bound_holds: monitors.iter().any(|r| r.name == "rho_linf" && r.verdict.passed()),
        });
        prev = Some(member);
    }
    Ok(IncompressibleTable { rows, aborted })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRow {
    pub cells: usize,
    pub steps: usize,
    pub balance: Balance,
    pub monitors: Vec<MonitorReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementTable {
    pub rows: Vec<RefinementRow>,
    pub aborted: Option<Aborted>,
}

impl RefinementTable {
    pub fn ratios(&self, name: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.monitors.iter().find(|m| m.name == name).map(|m| m.ratio))
            .collect()
    }

    /// `max/min − 1` of a monitor ratio across the rows.
    pub fn variation(&self, name: &str) -> Option<f64> {
        let r = self.ratios(name);
        if r.is_empty() {
            return None;
        }
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
        Some(max / min - 1.0)
    }
}

const REFINEMENT_MONITORS: [&str; 4] = [
    "nabla_q_control",
    "rho_p_control",
    "dual_energy_extra_control",
    "rho_p_extra_control",
];

impl Tabular for RefinementTable {
    fn columns(&self) -> Vec<&'static str> {
        let mut c = vec!["cells", "steps", "balance", "balance_relative", "balance_tol"];
        c.extend(REFINEMENT_MONITORS);
        c
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![
                    r.cells as f64,
                    r.steps as f64,
                    r.balance.balance,
                    r.balance.relative,
                    r.balance.tol,
                ];
                for name in REFINEMENT_MONITORS {
                    v.push(r.monitors.iter().find(|m| m.name == name).map_or(f64::NAN, |m| m.ratio));
                }
                v
            })
            .collect()
    }
}

/// Runs the same physics on each grid and collates the balance and the
/// estimate monitors at the comparison time.
pub fn refinement_study(spec: &StudySpec) -> Result<RefinementTable, LimitsError> {
    spec.validate()?;
    let Sweep::Refinement(ns) = &spec.sweep else {
        return Err(LimitsError::Invalid("refinement study needs a grid sweep".into()));
    };
    let gens = spec.initial.as_ref().expect("validated");
    let base = &spec.base.grid;
    let mut cfgs = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = Grid::new(base.dim(), n, base.length()).map_err(SolverError::from)?;
        let mut c = spec.base.clone();
        c.grid = grid;
        c.initial = gens.build(&grid)?;
        if let crate::solver::Velocity::Tabulated(_) = c.velocity {
            return Err(LimitsError::Invalid("tabulated velocity cannot be refined".into()));
        }
        c.t_end = spec.t;
        c.snapshot_every = f64::INFINITY;
        c.validate()?;
        cfgs.push(c);
    }
    let runs: Vec<Result<(SimConfig, Trajectory), SolverError>> = cfgs
        .into_par_iter()
        .map(|c| run(&c).map(|t| (c, t)))
        .collect();
    let mut rows = Vec::new();
    let mut aborted = None;
    for (&n, r) in ns.iter().zip(runs) {
        let (cfg, traj) = match r {
            Ok((c, t)) if t.completed() => (c, t),
            Ok((_, t)) => {
                aborted = t.abort.map(|error| Aborted {
                    member: format!("N = {n}"),
                    error,
                });
                break;
            }
            Err(error) => {
                aborted = Some(Aborted {
                    member: format!("N = {n}"),
                    error,
                });
                break;
            }
        };
        let balance = dissipation_balance(&traj.ledger, spec.t, &cfg).expect("run lands on t_end");
        let monitors = estimate_monitors(&traj.ledger, &cfg, None, DEFAULT_RATIO_CAP).expect("nonempty ledger");
        rows.push(RefinementRow {
            cells: n,
            steps: traj.steps,
            balance,
            monitors,
        });
    }
    Ok(RefinementTable { rows, aborted })
}
