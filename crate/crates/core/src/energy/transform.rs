//! Sampled convex analysis: the `z ↦ e` transform and the discrete
//! Legendre transform.

use super::{EnergyError, POS_INF};

/// Cumulative quadrature used by [`e_transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Cumulative trapezoid. Exact when `z` is piecewise linear between samples.
    #[default]
    Trapezoid,
    /// Integrates the cubic through the four nearest samples on each
    /// interval (fourth order on smooth data).
    Cubic,
}

/// How [`conjugate`] evaluates `sup_a (a b - f(a))` between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConjugateMethod {
    /// Max over samples: the exact conjugate of the piecewise-linear interpolant.
    #[default]
    PiecewiseLinear,
    /// Refines the discrete maximiser with the vertex of the parabola through
    /// its two neighbours. Approximates the conjugate of a smooth `f` to third
    /// order in the sample spacing.
    LocalQuadratic,
}

const CONVEXITY_TOL: f64 = 1e-10;

fn check_samples(a: &[f64], f: &[f64]) -> Result<(), EnergyError> {
    if a.len() != f.len() {
        return Err(EnergyError::TooFewSamples {
            need: a.len(),
            got: f.len(),
        });
    }
    for i in 1..a.len() {
        if !(a[i] > a[i - 1]) {
            return Err(EnergyError::NotIncreasing(i));
        }
    }
    for (index, &v) in f.iter().enumerate() {
        if v.is_nan() {
            return Err(EnergyError::InvalidSample {
                index,
                reason: "NaN",
            });
        }
        if v == f64::NEG_INFINITY {
            return Err(EnergyError::InvalidSample {
                index,
                reason: "-inf is not allowed for a proper function",
            });
        }
        if v == f64::MAX {
            return Err(EnergyError::InvalidSample {
                index,
                reason: "f64::MAX is reserved; use inf",
            });
        }
    }
    Ok(())
}

/// Number of leading finite samples; errors if `+∞` is not a pure tail.
pub(crate) fn finite_prefix(f: &[f64]) -> Result<usize, EnergyError> {
    let k = f.iter().position(|v| *v == POS_INF).unwrap_or(f.len());
    if let Some(j) = f[k..].iter().position(|v| *v != POS_INF) {
        return Err(EnergyError::InvalidSample {
            index: k + j,
            reason: "finite value after +inf (domain must be an interval)",
        });
    }
    Ok(k)
}

/// Index of the first slope decrease beyond tolerance, if any.
pub(crate) fn first_convexity_violation(a: &[f64], f: &[f64]) -> Option<usize> {
    let mut prev: Option<f64> = None;
    for i in 1..a.len() {
        let s = (f[i] - f[i - 1]) / (a[i] - a[i - 1]);
        if let Some(p) = prev {
            if s - p < -CONVEXITY_TOL * (1.0 + s.abs().max(p.abs())) {
                return Some(i - 1);
            }
        }
        prev = Some(s);
    }
    None
}

fn cumulative_trapezoid(a: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..a.len() {
        acc += 0.5 * (a[i] - a[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

fn cumulative_cubic(a: &[f64], f: &[f64]) -> Vec<f64> {
    let n = a.len();
    if n < 4 {
        return cumulative_trapezoid(a, f);
    }
    // two-point Gauss-Legendre is exact for cubics
    let g = 0.5 / 3f64.sqrt();
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..n - 1 {
        let s = i.saturating_sub(1).min(n - 4);
        let xs = &a[s..s + 4];
        let ys = &f[s..s + 4];
        let (lo, hi) = (a[i], a[i + 1]);
        let mid = 0.5 * (lo + hi);
        let w = hi - lo;
        let lagrange = |x: f64| -> f64 {
            let mut sum = 0.0;
            for j in 0..4 {
                let mut l = 1.0;
                for k in 0..4 {
                    if k != j {
                        l *= (x - xs[k]) / (xs[j] - xs[k]);
                    }
                }
                sum += ys[j] * l;
            }
            sum
        };
        acc += 0.5 * w * (lagrange(mid - g * w) + lagrange(mid + g * w));
        out.push(acc);
    }
    out
}

/// Samples of `e(a) = a z(a) - 2 ∫_0^a z(s) ds` on the grid of `z`.
///
/// `a` must start at 0 with `z(0) = 0`; `z` must be convex on its finite
/// prefix, and any `+∞` values form a tail (mapped to `+∞`).
pub fn e_transform(a: &[f64], z: &[f64], quadrature: Quadrature) -> Result<Vec<f64>, EnergyError> {
    check_samples(a, z)?;
    if a.len() < 2 {
        return Err(EnergyError::TooFewSamples {
            need: 2,
            got: a.len(),
        });
    }
    if a[0] != 0.0 || z[0] != 0.0 {
        return Err(EnergyError::NotAnchored);
    }
    let k = finite_prefix(z)?;
    if let Some(i) = first_convexity_violation(&a[..k], &z[..k]) {
        return Err(EnergyError::NotConvex(i));
    }
    let integral = match quadrature {
        Quadrature::Trapezoid => cumulative_trapezoid(&a[..k], &z[..k]),
        Quadrature::Cubic => cumulative_cubic(&a[..k], &z[..k]),
    };
    let mut e: Vec<f64> = (0..k).map(|i| a[i] * z[i] - 2.0 * integral[i]).collect();
    e.resize(a.len(), POS_INF);
    Ok(e)
}

/// Lower convex hull of `(a_i, f_i)` over finite samples; returns sample indices.
fn lower_hull(a: &[f64], f: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for i in (0..a.len()).filter(|&i| f[i] != POS_INF) {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let p = hull[hull.len() - 1];
            // remove p if it lies on or above the chord o -> i
            let cross = (a[p] - a[o]) * (f[i] - f[o]) - (f[p] - f[o]) * (a[i] - a[o]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

fn parabola_max(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let c = (d2 - d1) / (x[2] - x[0]);
    if !(c < 0.0) {
        return None;
    }
    let xs = (0.5 * (x[0] + x[1]) - d1 / (2.0 * c)).clamp(x[0], x[2]);
    Some(y[0] + d1 * (xs - x[0]) + c * (xs - x[0]) * (xs - x[1]))
}

/// Discrete Legendre transform `f*(b) = max_i (a_i b - f(a_i))` at each query `b`.
///
/// Works on the lower convex hull of the finite samples, so each query costs
/// `O(log n)`. `f` may carry `+∞` values anywhere; at least one must be finite.
pub fn conjugate(
    a: &[f64],
    f: &[f64],
    b: &[f64],
    method: ConjugateMethod,
) -> Result<Vec<f64>, EnergyError> {
    check_samples(a, f)?;
    let hull = lower_hull(a, f);
    if hull.is_empty() {
        return Err(EnergyError::AllInfinite);
    }
    let slopes: Vec<f64> = hull
        .windows(2)
        .map(|w| (f[w[1]] - f[w[0]]) / (a[w[1]] - a[w[0]]))
        .collect();
    let out = b
        .iter()
        .map(|&bq| {
            let v = hull[slopes.partition_point(|&s| s < bq)];
            let mut best = a[v] * bq - f[v];
            if method == ConjugateMethod::LocalQuadratic
                && v > 0
                && v + 1 < a.len()
                && f[v - 1] != POS_INF
                && f[v + 1] != POS_INF
            {
                let xs = [a[v - 1], a[v], a[v + 1]];
                let ys = [
                    xs[0] * bq - f[v - 1],
                    best,
                    xs[2] * bq - f[v + 1],
                ];
                if let Some(peak) = parabola_max(xs, ys) {
                    best = best.max(peak);
                }
            }
            best
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, hi: f64) -> Vec<f64> {
        (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn quadratic_z_gives_cubic_e() {
        let a = grid(4097, 4.0);
        let z: Vec<f64> = a.iter().map(|x| x * x - x).collect();
        let e = e_transform(&a, &z, Quadrature::Cubic).unwrap();
        let err = a
            .iter()
            .zip(&e)
            .map(|(x, v)| (v - x * x * x / 3.0).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "{err}");
        assert_eq!(e[0], 0.0);
    }

    #[test]
    fn entropy_z_gives_half_square() {
        let a = grid(4097, 4.0);
        let z: Vec<f64> = a
            .iter()
            .map(|&x| if x == 0.0 { 0.0 } else { x * x.ln() - x })
            .collect();
        let e = e_transform(&a, &z, Quadrature::Cubic).unwrap();
        let err = a
            .iter()
            .zip(&e)
            .map(|(x, v)| (v - 0.5 * x * x).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn zero_z_gives_zero_e() {
        let a = grid(33, 1.0);
        let e = e_transform(&a, &vec![0.0; 33], Quadrature::Trapezoid).unwrap();
        assert!(e.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn trapezoid_is_exact_for_piecewise_linear() {
        let a = vec![0.0, 1.0, 2.0, 3.0];
        let z = vec![0.0, -1.0, 0.0, 3.0];
        let e = e_transform(&a, &z, Quadrature::Trapezoid).unwrap();
        // e(1) = 1*(-1) - 2*(-0.5) = 0; e(2) = 0 - 2*(-1) = 2; e(3) = 9 - 2*(0.5) = 8
        assert_eq!(e, vec![0.0, 0.0, 2.0, 8.0]);
    }

    #[test]
    fn rejects_non_convex_with_index() {
        let a = grid(5, 4.0);
        let z = vec![0.0, 1.0, 1.5, 4.0, 4.2];
        assert_eq!(
            e_transform(&a, &z, Quadrature::Trapezoid),
            Err(EnergyError::NotConvex(1))
        );
    }

    #[test]
    fn infinite_tail_maps_to_infinity() {
        let a = vec![0.0, 0.5, 1.0, 1.5];
        let z = vec![0.0, 0.0, 0.0, POS_INF];
        let e = e_transform(&a, &z, Quadrature::Trapezoid).unwrap();
        assert_eq!(e, vec![0.0, 0.0, 0.0, POS_INF]);
        let bad = vec![0.0, POS_INF, 0.0, POS_INF];
        assert!(e_transform(&a, &bad, Quadrature::Trapezoid).is_err());
    }

    #[test]
    fn rejects_unanchored_and_sentinel_values() {
        assert_eq!(
            e_transform(&[0.1, 1.0], &[0.0, 1.0], Quadrature::Trapezoid),
            Err(EnergyError::NotAnchored)
        );
        assert!(e_transform(&[0.0, 1.0], &[0.0, f64::MAX], Quadrature::Trapezoid).is_err());
        assert_eq!(
            e_transform(&[0.0, 0.0], &[0.0, 1.0], Quadrature::Trapezoid),
            Err(EnergyError::NotIncreasing(1))
        );
    }

    #[test]
    fn conjugate_of_half_square() {
        let a = grid(10001, 10.0);
        let f: Vec<f64> = a.iter().map(|x| 0.5 * x * x).collect();
        let v = conjugate(&a, &f, &[3.0], ConjugateMethod::PiecewiseLinear).unwrap();
        assert!((v[0] - 4.5).abs() <= 1e-6);
    }

    #[test]
    fn conjugate_of_indicator_is_support_function() {
        let a = vec![-1.0, 0.0, 0.5, 1.0, 2.0];
        let f = vec![POS_INF, 0.0, 0.0, 0.0, POS_INF];
        let v = conjugate(&a, &f, &[2.0, -1.0], ConjugateMethod::PiecewiseLinear).unwrap();
        assert_eq!(v, vec![2.0, 0.0]);
    }

    #[test]
    fn conjugate_rejects_all_infinite() {
        assert_eq!(
            conjugate(&[0.0, 1.0], &[POS_INF, POS_INF], &[0.0], ConjugateMethod::PiecewiseLinear),
            Err(EnergyError::AllInfinite)
        );
    }

    #[test]
    fn quadratic_refinement_improves_smooth_conjugate() {
        let a = grid(4097, 4.0);
        let m = 5.0;
        let f: Vec<f64> = a.iter().map(|x: &f64| x.powf(m + 1.0) / (m + 1.0)).collect();
        let b = grid(4097, 4.0);
        let exact: Vec<f64> = b
            .iter()
            .map(|x: &f64| m / (m + 1.0) * x.powf((m + 1.0) / m))
            .collect();
        let err = |v: Vec<f64>| {
            v.iter()
                .zip(&exact)
                .map(|(u, w)| (u - w).abs())
                .fold(0.0, f64::max)
        };
        let pl = err(conjugate(&a, &f, &b, ConjugateMethod::PiecewiseLinear).unwrap());
        let lq = err(conjugate(&a, &f, &b, ConjugateMethod::LocalQuadratic).unwrap());
        assert!(pl > 1e-6);
        assert!(lq <= 1e-8, "{lq}");
    }
}
