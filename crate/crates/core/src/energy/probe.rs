//! Pointwise convergence of conjugates along the power family as `m → ∞`.

use super::{EnergyError, EnergyPair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub m: f64,
    pub b: f64,
    pub zstar_m: f64,
    pub zstar_limit: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    /// `(m, sup_q |(z*_m)^{-1}(q) - (z*_∞)^{-1}(q)|)` over the probe q-interval.
    pub inverse_gaps: Vec<(f64, f64)>,
}

impl ProbeTable {
    /// Gaps at one `b`, in the order of the exponent list.
    pub fn gaps_at(&self, b: f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.b == b).map(|r| r.gap).collect()
    }
}

const INVERSE_SAMPLES: usize = 257;

/// Compares `z*_m` for the power family against the incompressible limit
/// `z*_∞(b) = max(b, 0)` at each `(m, b)`, and the pressure inverses
/// uniformly on the compact interval `q_range ⊂ (0, ∞)`.
pub fn conjugate_convergence_probe(
    ms: &[f64],
    b_points: &[f64],
    q_range: (f64, f64),
) -> Result<ProbeTable, EnergyError> {
    let limit = EnergyPair::incompressible();
    let (q_lo, q_hi) = q_range;
    if !(q_lo > 0.0 && q_hi >= q_lo && q_hi.is_finite()) {
        return Err(EnergyError::InverseUndefined(q_lo));
    }
    let mut rows = Vec::with_capacity(ms.len() * b_points.len());
    let mut inverse_gaps = Vec::with_capacity(ms.len());
    for &m in ms {
        let energy = EnergyPair::power(m)?;
        for &b in b_points {
            let zstar_m = energy.zstar(b);
            let zstar_limit = limit.zstar(b);
            rows.push(ProbeRow {
                m,
                b,
                zstar_m,
                zstar_limit,
                gap: (zstar_m - zstar_limit).abs(),
            });
        }
        let mut worst: f64 = 0.0;
        for i in 0..INVERSE_SAMPLES {
            let q = q_lo + (q_hi - q_lo) * i as f64 / (INVERSE_SAMPLES - 1) as f64;
            let gap = (energy.zstarinv(q)? - limit.zstarinv(q)?).abs();
            worst = worst.max(gap);
        }
        inverse_gaps.push((m, worst));
    }
    Ok(ProbeTable { rows, inverse_gaps })
}

/// True when `values` is nonincreasing except for at most `allowed_inversions`
/// increases, each no larger than `slack` relative to the earlier value.
pub fn is_monotone_decreasing(values: &[f64], allowed_inversions: usize, slack: f64) -> bool {
    let mut inversions = 0;
    for w in values.windows(2) {
        if w[1] > w[0] {
            if w[1] - w[0] > slack * w[0].abs().max(f64::MIN_POSITIVE) {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= allowed_inversions
}
