use log::{debug, warn};

use super::{SimConfig, SimState, SolverError, StepReport, Stepper, Work};
use crate::diagnostics::{DissipationLedger, LedgerRow};
use crate::grid::{Field, Spectral};

/// A stored checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub t: f64,
    pub rho1: Field,
    pub rho2: Field,
    pub n: Field,
}

impl SnapshotSet {
    fn of(s: &SimState) -> Self {
        Self {
            t: s.t,
            rho1: s.rho1.clone(),
            rho2: s.rho2.clone(),
            n: s.n.clone(),
        }
    }

    pub fn state(&self) -> SimState {
        SimState {
            t: self.t,
            rho1: self.rho1.clone(),
            rho2: self.rho2.clone(),
            n: self.n.clone(),
        }
    }

    pub fn rho(&self) -> Field {
        self.state().rho()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<SnapshotSet>,
    pub ledger: DissipationLedger,
    /// Set when stepping stopped early; `snapshots` then ends at the last good state.
    pub abort: Option<SolverError>,
    pub warnings: Vec<String>,
    pub steps: usize,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }

    pub fn last(&self) -> &SnapshotSet {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    /// Snapshot at time `t` (relative tolerance `1e-12`).
    pub fn at(&self, t: f64) -> Option<&SnapshotSet> {
        let tol = 1e-12 * t.abs().max(1.0);
        self.snapshots.iter().find(|s| (s.t - t).abs() <= tol)
    }
}

fn row(st: &Stepper, spectral: &Spectral, s: &SimState, w: &Work, next: Option<(&SimState, f64, &StepReport)>) -> LedgerRow {
    let cfg = st.cfg;
    let g = cfg.grid;
    let (h, dv) = (g.h(), g.cell_volume());
    let e = &cfg.energy;
    let mut r = LedgerRow {
        t: s.t,
        ..Default::default()
    };
    let divv = st.div_v.values();
    let has_v = !cfg.velocity.is_zero();
    let (mut rho_l2, mut e_l1, mut estar_l2, mut q_l2, mut mu_l2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..g.len() {
        let (rho, q, mu) = (w.rho[i], w.q[i], w.mu(i));
        let (ev, es) = (e.e(rho), e.estar(q));
        r.e_rho += ev;
        e_l1 += ev.abs();
        r.estar_l1 += es.abs();
        estar_l2 += es * es;
        if has_v {
            r.estar_divv += es * divv[i];
        }
        r.mu_q += mu * q;
        r.rho_l1 += rho.abs();
        rho_l2 += rho * rho;
        r.rho_linf = r.rho_linf.max(rho.abs());
        q_l2 += q * q;
        mu_l2 += mu * mu;
        if rho > 0.0 {
            r.mu_over_rho_linf = r.mu_over_rho_linf.max(mu.abs() / rho);
        }
    }
    let mut grad_q_sq = 0.0;
    let mut grad_rho_sq = 0.0;
    let mut rho_v_sq = 0.0;
    for k in 0..g.dim() {
        let vk = st.v_faces.axis(k);
        for i in 0..g.len() {
            let j = g.neighbor(i, k, true);
            grad_q_sq += ((w.q[j] - w.q[i]) / h).powi(2);
            grad_rho_sq += ((w.rho[j] - w.rho[i]) / h).powi(2);
            let v = vk[i];
            let up = if v >= 0.0 { w.rho[i] } else { w.rho[j] };
            rho_v_sq += (up * v).powi(2);
        }
    }
    r.grad_q_sq = grad_q_sq * dv;
    r.grad_q_l2 = r.grad_q_sq.sqrt();
    r.gamma_grad_rho_sq = cfg.gamma * grad_rho_sq * dv;
    r.rho_v_l2 = (rho_v_sq * dv).sqrt();
    r.e_rho *= dv;
    r.e_l1 = e_l1 * dv;
    r.estar_l1 *= dv;
    r.estar_l2 = (estar_l2 * dv).sqrt();
    r.estar_divv *= dv;
    r.mu_q *= dv;
    r.rho_l1 *= dv;
    r.rho_l2 = (rho_l2 * dv).sqrt();
    r.q_l2 = (q_l2 * dv).sqrt();
    r.mu_l2 = (mu_l2 * dv).sqrt();
    if let Some((n, dt, report)) = next {
        r.dt = dt;
        r.clipped_mass = report.clipped_mass;
        let rate: Vec<f64> = n
            .rho1
            .values()
            .iter()
            .zip(n.rho2.values())
            .zip(&w.rho)
            .map(|((a, b), old)| (a + b - old) / dt)
            .collect();
        let hm = spectral.hminus1(&rate);
        r.dt_rho_hm1 = hm.seminorm;
        r.dt_rho_mean = hm.mean;
    }
    r
}

// support within 10% of the half-width from the periodic boundary
fn boundary_warning(s: &SimState) -> Option<String> {
    let rho = s.rho();
    let g = *rho.grid();
    let band = 0.1 * 0.5 * g.length();
    let total: f64 = rho.values().iter().sum();
    if total <= 0.0 {
        return None;
    }
    let near: f64 = rho
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let x = g.center(*i);
            (0..g.dim()).any(|k| x[k] < band || x[k] > g.length() - band)
        })
        .map(|(_, v)| v)
        .sum();
    (near > 1e-12 * total).then(|| {
        format!(
            "t = {}: fraction {:.3e} of the mass lies within {band} of the periodic boundary",
            s.t,
            near / total
        )
    })
}

/// Steps from `t = 0` to `t_end`, landing exactly on every multiple of
/// `snapshot_every` and on `t_end`. The initial state and every landing are
/// stored. On a numerical failure the partial trajectory is returned with
/// `abort` set.
pub fn run(cfg: &SimConfig) -> Result<Trajectory, SolverError> {
    let stepper = Stepper::new(cfg)?;
    let spectral = Spectral::new(cfg.grid);
    let mut state = SimState::initial(cfg);
    let mut traj = Trajectory {
        snapshots: vec![SnapshotSet::of(&state)],
        ledger: DissipationLedger::default(),
        abort: None,
        warnings: Vec::new(),
        steps: 0,
    };
    let mut warned_boundary = false;
    if let Some(w) = boundary_warning(&state) {
        warn!("{w}");
        traj.warnings.push(w);
        warned_boundary = true;
    }
    let stops: Vec<f64> = {
        let mut v = Vec::new();
        if cfg.snapshot_every.is_finite() {
            let mut k = 1u64;
            loop {
                let t = k as f64 * cfg.snapshot_every;
                if t >= cfg.t_end * (1.0 - 1e-12) {
                    break;
                }
                v.push(t);
                k += 1;
            }
        }
        v.push(cfg.t_end);
        v
    };
    let mut next_stop = 0;
    let mut clipped_total = 0.0;

    while state.t < cfg.t_end {
        let w = match stepper.work(&state) {
            Ok(w) => w,
            Err(e) => {
                traj.abort = Some(e);
                break;
            }
        };
        let target = stops[next_stop];
        let mut dt = stepper.cfl_from(&w, &state);
        let landing = state.t + dt >= target;
        if landing {
            dt = target - state.t;
        }
        let (mut new, report) = match stepper.step_from(&w, &state, dt, traj.steps) {
            Ok(x) => x,
            Err(e) => {
                traj.ledger.rows.push(row(&stepper, &spectral, &state, &w, None));
                traj.abort = Some(e);
                break;
            }
        };
        traj.ledger.rows.push(row(&stepper, &spectral, &state, &w, Some((&new, dt, &report))));
        clipped_total += report.clipped_mass;
        traj.steps += 1;
        if landing {
            new.t = target;
            next_stop += 1;
            traj.snapshots.push(SnapshotSet::of(&new));
            debug!("t = {} after {} steps", new.t, traj.steps);
            if !warned_boundary {
                if let Some(w) = boundary_warning(&new) {
                    warn!("{w}");
                    traj.warnings.push(w);
                    warned_boundary = true;
                }
            }
        }
        state = new;
    }
    if traj.abort.is_none() {
        match stepper.work(&state) {
            Ok(w) => traj.ledger.rows.push(row(&stepper, &spectral, &state, &w, None)),
            Err(e) => traj.abort = Some(e),
        }
    } else if let Some(e) = &traj.abort {
        warn!("run aborted: {e}");
        if traj.last().t != state.t {
            traj.snapshots.push(SnapshotSet::of(&state));
        }
    }
    if clipped_total > 0.0 {
        debug!("clipped {clipped_total:e} mass in total");
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyPair;
    use crate::grid::Grid;
    use crate::solver::{InitialData, InitialSpec};

    fn cfg(t_end: f64, every: f64) -> SimConfig {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let rho = InitialSpec::Gaussian {
            amplitude: 1.0,
            width: 0.3,
            center: None,
        }
        .build(&g)
        .unwrap();
        let mut c = SimConfig::new(EnergyPair::power(2.0).unwrap(), InitialData::single(rho));
        c.t_end = t_end;
        c.snapshot_every = every;
        c
    }

    #[test]
    fn zero_horizon_keeps_only_initial_state() {
        let t = run(&cfg(0.0, 0.1)).unwrap();
        assert_eq!(t.snapshots.len(), 1);
        assert_eq!(t.ledger.len(), 1);
        assert_eq!(t.ledger.rows[0].dt, 0.0);
    }

    #[test]
    fn lands_on_checkpoints() {
        let t = run(&cfg(0.1, 0.025)).unwrap();
        let times: Vec<f64> = t.snapshots.iter().map(|s| s.t).collect();
        let expected: Vec<f64> = (0..5).map(|k| k as f64 * 0.025).collect();
        assert_eq!(times, expected);
        for &tt in &times {
            assert!(t.ledger.index_at(tt).is_some());
        }
        assert_eq!(t.ledger.rows.last().unwrap().dt, 0.0);
    }
}
