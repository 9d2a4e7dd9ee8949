//! Convex energy pairs.
//!
//! An [`EnergyPair`] bundles a density energy `z`, its Legendre conjugate
//! `z*`, the transformed energy `e` (built from `z` by
//! `e(a) = a z(a) - 2 ∫_0^a z`), its conjugate `e*`, and the two pressure
//! maps used by the solver: `q = e'(ρ)` and `p = (z*)^{-1}(q)`.
//!
//! Every function here is extended-real valued. `+∞` is represented by
//! [`POS_INF`] and propagates through all evaluators; `f64::MAX` is not a
//! legal sample value so it can never be confused with the sentinel.

mod probe;
mod table;
mod transform;

pub use probe::{conjugate_convergence_probe, is_monotone_decreasing, ProbeRow, ProbeTable};
pub use table::{parse_table, TabulatedEnergy};
pub use transform::{conjugate, e_transform, ConjugateMethod, Quadrature};

use thiserror::Error;

/// The `+∞` sentinel for extended-real valued convex functions.
pub const POS_INF: f64 = f64::INFINITY;

/// Tolerance for the bisection in [`EnergyPair::beta`].
pub const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("power-law exponent must be finite, positive and different from 1 (got {0}); use the entropy energy for m = 1")]
    InvalidExponent(f64),
    #[error("argument {0} lies outside the finite domain of the energy")]
    OutOfDomain(f64),
    #[error("the subdifferential of e is multivalued at a = {0}")]
    Multivalued(f64),
    #[error("pressure inverse is undefined for q = {0}")]
    InverseUndefined(f64),
    #[error("sample grid must be strictly increasing (violated at index {0})")]
    NotIncreasing(usize),
    #[error("samples are not convex (second difference violated at index {0})")]
    NotConvex(usize),
    #[error("invalid sample value at index {index}: {reason}")]
    InvalidSample { index: usize, reason: &'static str },
    #[error("energy must vanish at a = 0 and the first sample must sit at a = 0")]
    NotAnchored,
    #[error("all samples are +inf")]
    AllInfinite,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("table parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Which closed form (or table) backs an [`EnergyPair`].
#[derive(Debug, Clone, PartialEq)]
pub enum EnergyFamily {
    /// `z(a) = (a^m - a)/(m - 1)`, `e(a) = a^{m+1}/(m+1)`.
    PowerLaw { m: f64 },
    /// `z(a) = a log a - a`, `e(a) = a²/2`; the `m → 1` member of the power family.
    Entropy,
    /// Indicator of `[0, 1]`; the `m → ∞` limit.
    Incompressible,
    /// Piecewise-linear `z` read from knots.
    Tabulated(TabulatedEnergy),
}

/// An immutable energy quadruple `(z, z*, e, e*)` plus pressure maps.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyPair {
    family: EnergyFamily,
}

impl EnergyPair {
    pub fn power(m: f64) -> Result<Self, EnergyError> {
        if !m.is_finite() || m <= 0.0 || m == 1.0 {
            return Err(EnergyError::InvalidExponent(m));
        }
        Ok(Self {
            family: EnergyFamily::PowerLaw { m },
        })
    }

    pub fn entropy() -> Self {
        Self {
            family: EnergyFamily::Entropy,
        }
    }

    pub fn incompressible() -> Self {
        Self {
            family: EnergyFamily::Incompressible,
        }
    }

    /// Builds a tabulated energy from knots `(a_i, z(a_i))`.
    pub fn tabulated(a: Vec<f64>, z: Vec<f64>) -> Result<Self, EnergyError> {
        Ok(Self {
            family: EnergyFamily::Tabulated(TabulatedEnergy::new(a, z)?),
        })
    }

    /// Loads a two-column `a z(a)` table (see [`parse_table`]).
    pub fn from_table_text(text: &str) -> Result<Self, EnergyError> {
        let (a, z) = parse_table(text)?;
        Self::tabulated(a, z)
    }

    pub fn family(&self) -> &EnergyFamily {
        &self.family
    }

    /// Supremum of the finite domain of `z` (and `e`).
    pub fn a_max(&self) -> f64 {
        match &self.family {
            EnergyFamily::PowerLaw { .. } | EnergyFamily::Entropy => POS_INF,
            EnergyFamily::Incompressible => 1.0,
            EnergyFamily::Tabulated(t) => t.a_max(),
        }
    }

    /// True when `e'` is single valued on `(0, a_max)`, so the solver can
    /// close the duality relation pointwise.
    pub fn has_single_valued_eprime(&self) -> bool {
        !matches!(self.family, EnergyFamily::Incompressible)
    }

    pub fn z(&self, a: f64) -> f64 {
        if a < 0.0 {
            return POS_INF;
        }
        match &self.family {
            EnergyFamily::PowerLaw { m } => (a.powf(*m) - a) / (m - 1.0),
            EnergyFamily::Entropy => {
                if a == 0.0 {
                    0.0
                } else {
                    a * a.ln() - a
                }
            }
            EnergyFamily::Incompressible => {
                if a <= 1.0 {
                    0.0
                } else {
                    POS_INF
                }
            }
            EnergyFamily::Tabulated(t) => t.z(a),
        }
    }

    pub fn zstar(&self, b: f64) -> f64 {
        match &self.family {
            EnergyFamily::PowerLaw { m } => {
                let m = *m;
                let base = ((m - 1.0) * b + 1.0) / m;
                if m > 1.0 {
                    base.max(0.0).powf(m / (m - 1.0))
                } else if base <= 0.0 {
                    POS_INF
                } else {
                    base.powf(m / (m - 1.0))
                }
            }
            EnergyFamily::Entropy => b.exp(),
            EnergyFamily::Incompressible => b.max(0.0),
            EnergyFamily::Tabulated(t) => t.zstar(b),
        }
    }

    pub fn e(&self, a: f64) -> f64 {
        if a < 0.0 {
            return POS_INF;
        }
        match &self.family {
            EnergyFamily::PowerLaw { m } => a.powf(m + 1.0) / (m + 1.0),
            EnergyFamily::Entropy => 0.5 * a * a,
            EnergyFamily::Incompressible => {
                if a <= 1.0 {
                    0.0
                } else {
                    POS_INF
                }
            }
            EnergyFamily::Tabulated(t) => t.e(a),
        }
    }

    pub fn estar(&self, b: f64) -> f64 {
        match &self.family {
            EnergyFamily::PowerLaw { m } => {
                m / (m + 1.0) * b.max(0.0).powf((m + 1.0) / m)
            }
            EnergyFamily::Entropy => {
                let b = b.max(0.0);
                0.5 * b * b
            }
            EnergyFamily::Incompressible => b.max(0.0),
            EnergyFamily::Tabulated(t) => t.estar(b),
        }
    }

    /// The q-pressure `q = e'(a)`.
    pub fn eprime(&self, a: f64) -> Result<f64, EnergyError> {
        if a < 0.0 || a.is_nan() {
            return Err(EnergyError::OutOfDomain(a));
        }
        match &self.family {
            EnergyFamily::PowerLaw { m } => Ok(a.powf(*m)),
            EnergyFamily::Entropy => Ok(a),
            EnergyFamily::Incompressible => {
                if a < 1.0 {
                    Ok(0.0)
                } else if a == 1.0 {
                    Err(EnergyError::Multivalued(a))
                } else {
                    Err(EnergyError::OutOfDomain(a))
                }
            }
            EnergyFamily::Tabulated(t) => t.eprime(a),
        }
    }

    /// `e''(a)`, the effective diffusivity of `ρ ↦ q` used for time-step
    /// control. Returns `+∞` where `e'` is not Lipschitz.
    pub fn eprime2(&self, a: f64) -> f64 {
        if a < 0.0 {
            return POS_INF;
        }
        match &self.family {
            EnergyFamily::PowerLaw { m } => {
                if a == 0.0 {
                    if *m > 1.0 {
                        0.0
                    } else {
                        POS_INF
                    }
                } else {
                    m * a.powf(m - 1.0)
                }
            }
            EnergyFamily::Entropy => 1.0,
            EnergyFamily::Incompressible => {
                if a < 1.0 {
                    0.0
                } else {
                    POS_INF
                }
            }
            EnergyFamily::Tabulated(t) => t.eprime2(a),
        }
    }

    /// The physical pressure `p = (z*)^{-1}(q)`.
    ///
    /// At `q = 0` the inverse is extended continuously when
    /// `sup ∂z(0) > -∞`; otherwise (entropy, power laws with `m < 1`)
    /// `q = 0` is rejected because `p → -∞`.
    pub fn zstarinv(&self, q: f64) -> Result<f64, EnergyError> {
        if q < 0.0 || !q.is_finite() {
            return Err(EnergyError::InverseUndefined(q));
        }
        match &self.family {
            EnergyFamily::PowerLaw { m } => {
                let m = *m;
                if q == 0.0 {
                    if m > 1.0 {
                        Ok(-1.0 / (m - 1.0))
                    } else {
                        Err(EnergyError::InverseUndefined(q))
                    }
                } else {
                    Ok((m * q.powf((m - 1.0) / m) - 1.0) / (m - 1.0))
                }
            }
            EnergyFamily::Entropy => {
                if q == 0.0 {
                    Err(EnergyError::InverseUndefined(q))
                } else {
                    Ok(q.ln())
                }
            }
            EnergyFamily::Incompressible => Ok(q),
            EnergyFamily::Tabulated(t) => Ok(t.zstarinv(q)),
        }
    }

    /// `β = inf{b : e*(b) ≥ 1}`.
    pub fn beta(&self) -> f64 {
        match &self.family {
            EnergyFamily::PowerLaw { m } => ((m + 1.0) / m).powf(m / (m + 1.0)),
            EnergyFamily::Entropy => std::f64::consts::SQRT_2,
            EnergyFamily::Incompressible => 1.0,
            EnergyFamily::Tabulated(_) => level_crossing(|b| self.estar(b), 1.0),
        }
    }

    /// Young gap `e(a) + e*(b) - a b`; `+∞` when `a` is outside the domain.
    pub fn young_gap(&self, a: f64, b: f64) -> f64 {
        let ea = self.e(a);
        if ea == POS_INF {
            return POS_INF;
        }
        let eb = self.estar(b);
        if eb == POS_INF {
            return POS_INF;
        }
        ea + eb - a * b
    }
}

/// `inf{b : f(b) ≥ level}` for continuous nondecreasing `f` with `f(0) < level`,
/// by bracket expansion and bisection.
pub fn level_crossing(f: impl Fn(f64) -> f64, level: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < level {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return POS_INF;
        }
    }
    while hi - lo > BISECTION_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
