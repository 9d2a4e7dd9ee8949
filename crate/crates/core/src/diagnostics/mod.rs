//! Energy-dissipation audits, a priori estimate monitors and duality checks.

mod ledger;
mod monitors;

pub use ledger::{DissipationLedger, LedgerRow, COLUMNS};
pub use monitors::{estimate_monitors, MonitorKind, MonitorReport, DEFAULT_RATIO_CAP};

use thiserror::Error;

use crate::energy::EnergyPair;
use crate::grid::{Field, Grid};
use crate::solver::{SimConfig, SimState, SolverError, Stepper};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("time {t} is not a checkpoint of the ledger (last row at {last:?})")]
    NotACheckpoint { t: f64, last: Option<f64> },
    #[error("ledger is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.passed() { "PASS" } else { "FAIL" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Balance {
    pub t: f64,
    /// `∫e(ρ_T) − ∫e(ρ⁰) + ∫₀ᵀ∫(|∇q|² + e*(q)∇·V − μq)`.
    pub balance: f64,
    /// `∫e(ρ⁰) + ∫₀ᵀ∫|∇q|²`.
    pub scale: f64,
    pub relative: f64,
    pub tol: f64,
    pub one_sided: bool,
    pub verdict: Verdict,
}

/// Reference resolution anchoring [`tol_balance`]: 256 cells per axis.
pub const REFERENCE_CELLS: f64 = 256.0;

/// Balance tolerance for a first-order scheme, 5% at the reference
/// resolution `h_ref = L/256`, `dt_ref = 0.9 h_ref²/4`, linear in `h + dt`.
pub fn tol_balance(grid: &Grid, dt_mean: f64) -> f64 {
    let h_ref = grid.length() / REFERENCE_CELLS;
    let dt_ref = 0.9 * h_ref * h_ref / 4.0;
    0.05 * (grid.h() + dt_mean) / (h_ref + dt_ref)
}

pub fn dissipation_balance(
    ledger: &DissipationLedger,
    t: f64,
    cfg: &SimConfig,
) -> Result<Balance, DiagnosticsError> {
    let first = ledger.rows.first().ok_or(DiagnosticsError::Empty)?;
    let idx = ledger.index_at(t).ok_or(DiagnosticsError::NotACheckpoint {
        t,
        last: ledger.final_time(),
    })?;
    let dissipation = ledger.integral(idx, |r| r.grad_q_sq);
    let balance = ledger.rows[idx].e_rho - first.e_rho + dissipation + ledger.integral(idx, |r| r.estar_divv)
        - ledger.integral(idx, |r| r.mu_q);
    let scale = first.e_rho + dissipation;
    let dt_mean = if idx == 0 { 0.0 } else { ledger.rows[idx].t / idx as f64 };
    let tol = tol_balance(&cfg.grid, dt_mean);
    let relative = if scale > 0.0 { balance / scale } else { 0.0 };
    let one_sided = cfg.gamma > 0.0;
    let ok = if one_sided {
        relative <= tol
    } else {
        relative.abs() <= tol
    };
    Ok(Balance {
        t: ledger.rows[idx].t,
        balance,
        scale,
        relative,
        tol,
        one_sided,
        verdict: Verdict::from_bool(ok),
    })
}

/// `max |ρq − e(ρ) − e*(q)| / (1 + ρq)` over cells.
pub fn duality_residual_fields(energy: &EnergyPair, rho: &Field, q: &Field) -> f64 {
    rho.values()
        .iter()
        .zip(q.values())
        .map(|(&r, &q)| {
            let rq = r * q;
            (rq - energy.e(r) - energy.estar(q)).abs() / (1.0 + rq.abs())
        })
        .fold(0.0, f64::max)
}

pub fn duality_residual(state: &SimState, cfg: &SimConfig) -> Result<f64, SolverError> {
    let d = Stepper::new(cfg)?.derived_fields(state)?;
    Ok(duality_residual_fields(&cfg.energy, &d.rho, &d.q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaLink {
    pub beta: f64,
    /// `‖q − (q−β)₊‖∞`.
    pub truncation_sup: f64,
    /// `min (e*(q) − e*(β))₊ − (q−β)₊/β`; nonnegative when the link holds.
    pub worst_margin: f64,
    pub verdict: Verdict,
}

/// Checks the two cellwise facts that tie `q` to the pressure scale `β`.
pub fn beta_link(energy: &EnergyPair, q: &Field) -> BetaLink {
    let beta = energy.beta();
    let eb = energy.estar(beta);
    let mut truncation_sup: f64 = 0.0;
    let mut worst_margin = f64::INFINITY;
    for &v in q.values() {
        let excess = (v - beta).max(0.0);
        truncation_sup = truncation_sup.max((v - excess).abs());
        let margin = (energy.estar(v) - eb).max(0.0) - excess / beta;
        worst_margin = worst_margin.min(margin / (1.0 + excess / beta));
    }
    let ok = truncation_sup <= beta * (1.0 + 1e-12) && worst_margin >= -1e-12;
    BetaLink {
        beta,
        truncation_sup,
        worst_margin,
        verdict: Verdict::from_bool(ok),
    }
}
