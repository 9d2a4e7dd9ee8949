use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

/// Per-step record. Integrals carry the cell volume `h^d`; norms are spatial.
///
/// Row `k` describes the state at time `t` and the step of length `dt`
/// taken from it; `dt_rho_hm1`, `dt_rho_mean` and `clipped_mass` refer to that
/// step. The last row of a finished run has `dt = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub dt: f64,
    /// `∫|∇q|²`.
    pub grad_q_sq: f64,
    /// `∫e*(q) ∇·V`.
    pub estar_divv: f64,
    /// `∫μq`.
    pub mu_q: f64,
    /// `∫e(ρ)`.
    pub e_rho: f64,
    pub rho_l1: f64,
    pub rho_l2: f64,
    pub rho_linf: f64,
    /// Homogeneous `Ḣ⁻¹` seminorm of `(ρ^{k+1} − ρ^k)/dt`.
    pub dt_rho_hm1: f64,
    pub grad_q_l2: f64,
    pub estar_l1: f64,
    pub e_l1: f64,
    /// `γ ∫|∇ρ|²`.
    pub gamma_grad_rho_sq: f64,
    pub clipped_mass: f64,
    /// `max |μ|/ρ` over cells with `ρ > 0`.
    pub mu_over_rho_linf: f64,
    pub mu_l2: f64,
    /// `‖ρ_up V‖₂` over faces.
    pub rho_v_l2: f64,
    pub estar_l2: f64,
    pub q_l2: f64,
    /// Cell mean of `(ρ^{k+1} − ρ^k)/dt`, the part `Ḣ⁻¹` cannot see.
    pub dt_rho_mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DissipationLedger {
    pub rows: Vec<LedgerRow>,
}

impl DissipationLedger {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Row whose time matches `t` to a relative `1e-12`.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * t.abs().max(1.0);
        self.rows.iter().position(|r| (r.t - t).abs() <= tol)
    }

    pub fn final_time(&self) -> Option<f64> {
        self.rows.last().map(|r| r.t)
    }

    /// Left Riemann sum `Σ_{k<idx} dt_k f(row_k)`.
    pub fn integral(&self, idx: usize, f: impl Fn(&LedgerRow) -> f64) -> f64 {
        self.rows[..idx].iter().map(|r| r.dt * f(r)).sum()
    }

    /// Maximum of `f` over rows `0..=idx`.
    pub fn sup(&self, idx: usize, f: impl Fn(&LedgerRow) -> f64) -> f64 {
        self.rows[..=idx].iter().map(f).fold(0.0, f64::max)
    }

    /// Running integrals `I_idx = Σ_{k<idx} dt_k f(row_k)` for every row.
    pub fn cumulative(&self, f: impl Fn(&LedgerRow) -> f64) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            out.push(acc);
            acc += r.dt * f(r);
        }
        out
    }

    pub fn to_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        wtr.write_record(COLUMNS)?;
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn from_csv(r: impl Read) -> csv::Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr.deserialize().collect::<csv::Result<Vec<LedgerRow>>>()?;
        Ok(Self { rows })
    }
}

/// Header, in column order.
pub const COLUMNS: [&str; 21] = [
    "t",
    "dt",
    "grad_q_sq",
    "estar_divv",
    "mu_q",
    "e_rho",
    "rho_l1",
    "rho_l2",
    "rho_linf",
    "dt_rho_hm1",
    "grad_q_l2",
    "estar_l1",
    "e_l1",
    "gamma_grad_rho_sq",
    "clipped_mass",
    "mu_over_rho_linf",
    "mu_l2",
    "rho_v_l2",
    "estar_l2",
    "q_l2",
    "dt_rho_mean",
];
