use super::{DiagnosticsError, DissipationLedger, Verdict};
use crate::solver::SimConfig;

pub const DEFAULT_RATIO_CAP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorKind {
    /// Holds with the printed constant; checked at every row.
    Exact,
    /// Holds up to a dimensional constant; the ratio is reported.
    Ratio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub name: &'static str,
    pub kind: MonitorKind,
    /// Values at the row with the largest ratio (exact) or at `T` (ratio).
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub verdict: Verdict,
}

fn exact_ok(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + 1e-6) + 1e-8
}

/// Evaluates the eight a priori estimates up to checkpoint `t` (default: last row).
///
/// The four exact estimates are checked at every row up to `t` and the worst
/// row is reported. The four `≲` estimates are evaluated at `t` with constant
/// one and pass when their ratio is at most `cap`.
pub fn estimate_monitors(
    ledger: &DissipationLedger,
    cfg: &SimConfig,
    t: Option<f64>,
    cap: f64,
) -> Result<Vec<MonitorReport>, DiagnosticsError> {
    if ledger.is_empty() {
        return Err(DiagnosticsError::Empty);
    }
    let end = match t {
        Some(t) => ledger.index_at(t).ok_or(DiagnosticsError::NotACheckpoint {
            t,
            last: ledger.final_time(),
        })?,
        None => ledger.len() - 1,
    };
    let rows = &ledger.rows;
    let d = cfg.grid.dim() as f64;
    let div_v = cfg.velocity.div_bound(&cfg.grid);
    let gamma = cfg.gamma;
    let beta = cfg.energy.beta();

    let cum_mass = ledger.cumulative(|r| r.rho_l1);
    let cum_l2sq = ledger.cumulative(|r| r.rho_l2 * r.rho_l2);
    let cum_gq = ledger.cumulative(|r| r.grad_q_sq);
    let cum_ggr = ledger.cumulative(|r| r.gamma_grad_rho_sq);
    let cum_mu = ledger.cumulative(|r| r.mu_l2 * r.mu_l2);
    let cum_rv = ledger.cumulative(|r| r.rho_v_l2 * r.rho_v_l2);
    let cum_hm1 = ledger.cumulative(|r| r.dt_rho_hm1 * r.dt_rho_hm1);

    let mut exact: [(f64, f64, f64, f64); 4] = [(f64::NEG_INFINITY, 0.0, 0.0, 0.0); 4];
    let mut all_ok = [true; 4];
    let mut mu_rho: f64 = 0.0;
    for idx in 0..=end {
        let tt = rows[idx].t;
        let pairs = [
            (rows[idx].rho_l1, rows[0].rho_l1 * (tt * mu_rho).exp()),
            (
                rows[idx].rho_linf,
                rows[0].rho_linf * (2.0 * tt * (div_v + mu_rho)).exp(),
            ),
            (
                cum_ggr[idx],
                rows[0].rho_l2.powi(2) + cum_l2sq[idx] * (mu_rho + div_v),
            ),
            (
                cum_hm1[idx].sqrt(),
                (gamma * cum_ggr[idx]).sqrt() + cum_gq[idx].sqrt() + cum_mu[idx].sqrt() + cum_rv[idx].sqrt(),
            ),
        ];
        for (k, (lhs, rhs)) in pairs.into_iter().enumerate() {
            all_ok[k] &= exact_ok(lhs, rhs);
            let q = ratio(lhs, rhs);
            if q > exact[k].0 {
                exact[k] = (q, tt, lhs, rhs);
            }
        }
        mu_rho = mu_rho.max(rows[idx].mu_over_rho_linf);
    }
    let names = ["l1_growth", "rho_linf", "gamma_nabla_rho", "rho_h_minus1"];
    let mut out: Vec<MonitorReport> = names
        .iter()
        .zip(exact)
        .zip(all_ok)
        .map(|((name, (_, tt, lhs, rhs)), ok)| MonitorReport {
            name,
            kind: MonitorKind::Exact,
            t: tt,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            verdict: Verdict::from_bool(ok),
        })
        .collect();

    let tt = rows[end].t;
    let mass_t = cum_mass[end];
    let l2sq_t = cum_l2sq[end];
    let gq_t = cum_gq[end];
    let mass_sup = ledger.sup(end, |r| r.rho_l1);
    let rho_sup = ledger.sup(end, |r| r.rho_linf);
    let mu_rho = if end == 0 { 0.0 } else { ledger.sup(end - 1, |r| r.mu_over_rho_linf) };
    let r = (2.0 * d + 4.0) / (d + 4.0);
    let estar_l1_t = ledger.integral(end, |row| row.estar_l1);
    let product = estar_l1_t.powf(2.0 / (d + 2.0))
        * gq_t.sqrt().powf(d / (d + 2.0))
        * rho_sup.powf(d / (d + 2.0));
    let lr = |f: &dyn Fn(&super::LedgerRow) -> f64| ledger.integral(end, |row| f(row).powf(r)).powf(1.0 / r);

    let ratios = [
        (
            "nabla_q_control",
            gq_t,
            rows[0].e_rho
                + beta.max(1.0)
                    * (mass_t + mass_sup.powf(2.0 / d) * l2sq_t)
                    * (1.0 + mu_rho + div_v).powi(2),
        ),
        (
            "rho_p_control",
            estar_l1_t + ledger.integral(end, |row| row.e_l1),
            beta * mass_t + (beta * mass_sup).powf(1.0 / d) * l2sq_t.sqrt() * gq_t.sqrt(),
        ),
        ("dual_energy_extra_control", lr(&|row| row.estar_l2), product),
        (
            "rho_p_extra_control",
            lr(&|row| row.q_l2),
            beta * tt * cfg.grid.volume() + beta * product,
        ),
    ];
    for (name, lhs, rhs) in ratios {
        let q = ratio(lhs, rhs);
        out.push(MonitorReport {
            name,
            kind: MonitorKind::Ratio,
            t: tt,
            lhs,
            rhs,
            ratio: q,
            verdict: Verdict::from_bool(q <= cap),
        });
    }
    Ok(out)
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}
