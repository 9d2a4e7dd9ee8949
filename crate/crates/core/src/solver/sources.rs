use std::fmt;
use std::sync::Arc;

/// Reaction matrix `F[i][j] = F_{i+1,j+1}(p, n)`: species `i` gains `ρ_j F[i][j]`.
pub type Rates = [[f64; 2]; 2];

type RateFn = dyn Fn(f64, f64) -> Rates + Send + Sync;

/// User-supplied reaction terms with their declared bound and structure flags.
#[derive(Clone)]
pub struct CustomSources {
    pub rates: Arc<RateFn>,
    pub bound: f64,
    pub nonneg_cross: bool,
    pub monotone_column_sums: bool,
}

impl fmt::Debug for CustomSources {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSources")
            .field("bound", &self.bound)
            .field("nonneg_cross", &self.nonneg_cross)
            .field("monotone_column_sums", &self.monotone_column_sums)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum SourceModel {
    Off,
    /// `F₁₁ = g₁ n (1 − p/p_H)₊ − d₁`, `F₁₂ = 0`, `F₂₁ = d₁`, `F₂₂ = −d₂`.
    Homeostatic { g1: f64, p_h: f64, d1: f64, d2: f64 },
    Custom(CustomSources),
}

impl PartialEq for SourceModel {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SourceModel::Off, SourceModel::Off) => true,
            (
                SourceModel::Homeostatic { g1, p_h, d1, d2 },
                SourceModel::Homeostatic {
                    g1: g,
                    p_h: p,
                    d1: a,
                    d2: b,
                },
            ) => g1 == g && p_h == p && d1 == a && d2 == b,
            (SourceModel::Custom(a), SourceModel::Custom(b)) => Arc::ptr_eq(&a.rates, &b.rates),
            _ => false,
        }
    }
}

/// A violated structural assumption found by [`SourceModel::check`].
#[derive(Debug, Clone, PartialEq)]
pub enum SourceViolation {
    Unbounded { p: f64, n: f64, value: f64, bound: f64 },
    NegativeCross { p: f64, n: f64 },
    IncreasingColumnSum { column: usize, n: f64, p_lo: f64, p_hi: f64 },
}

impl SourceModel {
    pub fn is_off(&self) -> bool {
        matches!(self, SourceModel::Off)
    }

    pub fn rates(&self, p: f64, n: f64) -> Rates {
        match self {
            SourceModel::Off => [[0.0; 2]; 2],
            SourceModel::Homeostatic { g1, p_h, d1, d2 } => {
                let growth = g1 * n * (1.0 - p / p_h).max(0.0);
                [[growth - d1, 0.0], [*d1, -d2]]
            }
            SourceModel::Custom(c) => (c.rates)(p, n),
        }
    }

    /// Uniform bound `B ≥ |F_{ij}|` on `p ≥ p_floor`, `0 ≤ n ≤ n_max`.
    pub fn bound(&self, p_floor: f64, n_max: f64) -> f64 {
        match self {
            SourceModel::Off => 0.0,
            SourceModel::Homeostatic { g1, p_h, d1, d2 } => {
                let top = g1 * n_max.max(0.0) * (1.0 - p_floor / p_h).max(0.0);
                (top - d1).abs().max(*d1).max(*d2)
            }
            SourceModel::Custom(c) => c.bound,
        }
    }

    /// Samples the box `[p_lo, p_hi] × [0, n_max]` for the boundedness,
    /// cross-sign and (when claimed) column-monotonicity assumptions.
    pub fn check(&self, p_range: (f64, f64), n_max: f64, samples: usize) -> Vec<SourceViolation> {
        let (p_lo, p_hi) = p_range;
        let bound = self.bound(p_lo, n_max);
        let (cross_claimed, monotone_claimed) = match self {
            SourceModel::Custom(c) => (c.nonneg_cross, c.monotone_column_sums),
            _ => (true, true),
        };
        let samples = samples.max(2);
        let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let mut out = Vec::new();
        for j in 0..samples {
            let n = at(0.0, n_max, j);
            let mut prev: Option<(f64, [f64; 2])> = None;
            for i in 0..samples {
                let p = at(p_lo, p_hi, i);
                let f = self.rates(p, n);
                let worst = f.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()));
                if worst > bound * (1.0 + 1e-12) {
                    out.push(SourceViolation::Unbounded { p, n, value: worst, bound });
                }
                if cross_claimed && (f[0][1] < 0.0 || f[1][0] < 0.0) {
                    out.push(SourceViolation::NegativeCross { p, n });
                }
                let sums = [f[0][0] + f[1][0], f[0][1] + f[1][1]];
                if monotone_claimed {
                    if let Some((p_prev, s_prev)) = prev {
                        for column in 0..2 {
                            if sums[column] > s_prev[column] + 1e-12 {
                                out.push(SourceViolation::IncreasingColumnSum {
                                    column,
                                    n,
                                    p_lo: p_prev,
                                    p_hi: p,
                                });
                            }
                        }
                    }
                }
                prev = Some((p, sums));
            }
        }
        out
    }
}
