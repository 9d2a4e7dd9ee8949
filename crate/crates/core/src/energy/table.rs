//! Tabulated (piecewise-linear) energies.

use super::transform::{finite_prefix, first_convexity_violation};
use super::{e_transform, EnergyError, Quadrature, POS_INF};

/// A piecewise-linear energy `z` on knots `0 = a_0 < … < a_{k-1}`, `+∞` beyond.
///
/// For piecewise-linear `z` the transformed energy `e` is again piecewise
/// linear with slope `a_i s_i - z_i = z*(s_i)` on segment `i`, so `z*`, `e`
/// and `e*` are all exact. The q-pressure `e'` of a piecewise-linear `e` is a
/// step function; for time stepping it is replaced by the continuous
/// interpolant through the segment slopes at segment midpoints. The duality
/// residual then measures the tabulation error.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedEnergy {
    a: Vec<f64>,
    z: Vec<f64>,
    e: Vec<f64>,
    z_slope: Vec<f64>,
    e_slope: Vec<f64>,
    // nodes of the continuous q-pressure interpolant
    q_nodes_a: Vec<f64>,
    q_nodes_q: Vec<f64>,
}

fn segment(knots: &[f64], x: f64) -> usize {
    // index i with knots[i] <= x < knots[i+1], clamped to the last segment
    knots
        .partition_point(|&k| k <= x)
        .saturating_sub(1)
        .min(knots.len() - 2)
}

fn interp(knots: &[f64], values: &[f64], x: f64) -> f64 {
    let i = segment(knots, x);
    let t = (x - knots[i]) / (knots[i + 1] - knots[i]);
    values[i] + t * (values[i + 1] - values[i])
}

impl TabulatedEnergy {
    pub fn new(a: Vec<f64>, z: Vec<f64>) -> Result<Self, EnergyError> {
        if a.len() != z.len() {
            return Err(EnergyError::TooFewSamples {
                need: a.len(),
                got: z.len(),
            });
        }
        let e_full = e_transform(&a, &z, Quadrature::Trapezoid)?;
        let k = finite_prefix(&z)?;
        if k < 2 {
            return Err(EnergyError::TooFewSamples { need: 2, got: k });
        }
        let (a, z, e) = (a[..k].to_vec(), z[..k].to_vec(), e_full[..k].to_vec());
        debug_assert!(first_convexity_violation(&a, &z).is_none());
        let z_slope: Vec<f64> = (0..k - 1)
            .map(|i| (z[i + 1] - z[i]) / (a[i + 1] - a[i]))
            .collect();
        let e_slope: Vec<f64> = (0..k - 1).map(|i| a[i] * z_slope[i] - z[i]).collect();

        let mut q_nodes_a = vec![0.0];
        let mut q_nodes_q = vec![0.0];
        for i in 0..k - 1 {
            let mid = 0.5 * (a[i] + a[i + 1]);
            q_nodes_a.push(mid);
            q_nodes_q.push(e_slope[i].max(*q_nodes_q.last().unwrap()));
        }
        q_nodes_a.push(a[k - 1]);
        q_nodes_q.push(*q_nodes_q.last().unwrap());

        Ok(Self {
            a,
            z,
            e,
            z_slope,
            e_slope,
            q_nodes_a,
            q_nodes_q,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.a
    }

    pub fn a_max(&self) -> f64 {
        *self.a.last().unwrap()
    }

    pub fn z(&self, a: f64) -> f64 {
        if a < 0.0 || a > self.a_max() {
            return POS_INF;
        }
        interp(&self.a, &self.z, a)
    }

    pub fn e(&self, a: f64) -> f64 {
        if a < 0.0 || a > self.a_max() {
            return POS_INF;
        }
        interp(&self.a, &self.e, a)
    }

    pub fn zstar(&self, b: f64) -> f64 {
        let i = self.z_slope.partition_point(|&s| s < b);
        self.a[i] * b - self.z[i]
    }

    pub fn estar(&self, b: f64) -> f64 {
        let i = self.e_slope.partition_point(|&s| s < b);
        self.a[i] * b - self.e[i]
    }

    pub fn eprime(&self, a: f64) -> Result<f64, EnergyError> {
        let a_max = self.a_max();
        if a > a_max {
            return Err(EnergyError::OutOfDomain(a));
        }
        if a == a_max {
            return Err(EnergyError::Multivalued(a));
        }
        Ok(interp(&self.q_nodes_a, &self.q_nodes_q, a))
    }

    pub fn eprime2(&self, a: f64) -> f64 {
        if a >= self.a_max() {
            return POS_INF;
        }
        let i = segment(&self.q_nodes_a, a);
        let slope = |j: usize| {
            (self.q_nodes_q[j + 1] - self.q_nodes_q[j]) / (self.q_nodes_a[j + 1] - self.q_nodes_a[j])
        };
        let mut s = slope(i);
        if i + 2 < self.q_nodes_a.len() {
            s = s.max(slope(i + 1));
        }
        s
    }

    /// Exact inverse of the piecewise-linear `z*` on `[0, ∞)`.
    pub fn zstarinv(&self, q: f64) -> f64 {
        // z*(s_i) = e_slope[i], nondecreasing in i
        let i = self.e_slope.partition_point(|&v| v < q);
        if i == 0 {
            return self.z_slope[0];
        }
        (q + self.z[i]) / self.a[i]
    }
}

/// Parses a two-column `a z(a)` table. `#` starts a comment; `inf` is
/// accepted as the `+∞` sentinel.
pub fn parse_table(text: &str) -> Result<(Vec<f64>, Vec<f64>), EnergyError> {
    let mut a = Vec::new();
    let mut z = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(EnergyError::Parse {
                line: lineno + 1,
                message: format!("expected 2 columns, found {}", cols.len()),
            });
        }
        let parse = |s: &str| -> Result<f64, EnergyError> {
            s.to_ascii_lowercase()
                .parse::<f64>()
                .map_err(|e| EnergyError::Parse {
                    line: lineno + 1,
                    message: format!("{s:?}: {e}"),
                })
        };
        a.push(parse(cols[0])?);
        z.push(parse(cols[1])?);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(EnergyError::Parse {
            line: 0,
            message: "density column must be finite".into(),
        });
    }
    Ok((a, z))
}
