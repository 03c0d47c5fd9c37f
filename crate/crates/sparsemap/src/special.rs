//! Special functions used by the detectors and the moment verifiers.
//!
//! `erf`/`erfc`/`ln_gamma` are backed by `libm`'s double-precision
//! implementations; the log-domain helpers on top of them are what the
//! ratio computations actually call, so that nothing underflows even for
//! correlations thousands of standard deviations out in a tail.

use crate::error::{Error, Result};
use crate::float;

/// Error function, `2/sqrt(pi) * ∫_0^x exp(-t^2) dt`.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function `1 - erf(x)`.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if x <= 0.0 || x.is_nan() {
        return Err(Error::DomainError("ln_gamma requires x > 0"));
    }
    Ok(libm::lgamma(x))
}

/// `ln(erfc(x))`, finite for any finite `x`.
///
/// `erfc` itself underflows near `x ≈ 26.6`; past `x = 25` this switches to
/// the asymptotic expansion `erfc(x) = exp(-x^2)/(x sqrt(pi)) * S(1/x^2)`.
pub fn ln_erfc(x: f64) -> f64 {
    if x <= 25.0 {
        return float::ln(erfc(x));
    }
    let u = 1.0 / (x * x);
    let series = 1.0 + u * (-0.5 + u * (0.75 + u * (-1.875 + u * 6.5625)));
    -x * x - float::ln(x) - 0.5 * float::ln(core::f64::consts::PI) + float::ln(series)
}

/// `ln(sum_i exp(v_i))` without overflow; returns `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if v > max {
            max = v;
        }
    }
    if !max.is_finite() {
        return max;
    }
    let mut sum = 0.0;
    for &v in values {
        sum += float::exp(v - max);
    }
    max + float::ln(sum)
}

/// Log-density of `N(mean, var)` at `z`.
#[inline]
pub(crate) fn ln_normal_pdf(z: f64, mean: f64, var: f64) -> f64 {
    let d = z - mean;
    -d * d / (2.0 * var) - 0.5 * (float::LN_2PI + float::ln(var))
}

/// `ln((erf(a) + erf(b)) / 2)` for `a + b > 0`, stable when the sum is a
/// difference of two tails (one argument negative).
pub(crate) fn ln_half_erf_sum(a: f64, b: f64) -> f64 {
    debug_assert!(a + b > 0.0);
    if a >= 0.0 && b >= 0.0 {
        // Both terms non-negative: no cancellation.
        float::ln(erf(a) + erf(b)) - core::f64::consts::LN_2
    } else {
        // erf(a) + erf(b) = erfc(lo) - erfc(hi) with 0 <= lo < hi.
        let lo = -a.min(b);
        let hi = a.max(b);
        let l_lo = ln_erfc(lo);
        let l_hi = ln_erfc(hi);
        l_lo + float::ln(-float::expm1(l_hi - l_lo)) - core::f64::consts::LN_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series for erf, an implementation-independent reference.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            let n = n as f64;
            term *= -x * x / n;
            sum += term / (2.0 * n + 1.0);
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum * 2.0 / core::f64::consts::PI.sqrt()
    }

    #[test]
    fn erf_at_zero_and_odd_symmetry() {
        assert_eq!(erf(0.0), 0.0);
        for &x in &[0.3, 1.7, 4.2] {
            assert_eq!(erf(-x), -erf(x));
        }
    }

    #[test]
    fn erf_matches_series_reference() {
        assert!((erf(1.0) - 0.8427007929497149).abs() < 1e-7);
        for i in 0..40 {
            let x = -2.0 + 0.1 * i as f64;
            assert!(
                (erf(x) - erf_series(x)).abs() < 1e-7,
                "erf({x}) disagrees with series"
            );
        }
    }

    #[test]
    fn ln_gamma_exact_values() {
        assert!(ln_gamma(1.0).unwrap().abs() < 1e-14);
        assert!(ln_gamma(2.0).unwrap().abs() < 1e-14);
        let half = ln_gamma(0.5).unwrap();
        assert!((half - 0.5 * core::f64::consts::PI.ln()).abs() < 1e-13);
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-3.0).is_err());
    }

    /// Stirling series with Bernoulli terms; independent of libm's algorithm.
    fn ln_gamma_stirling(mut x: f64) -> f64 {
        let mut shift = 0.0;
        while x < 12.0 {
            shift -= x.ln();
            x += 1.0;
        }
        const B: [f64; 5] = [
            1.0 / 12.0,
            -1.0 / 360.0,
            1.0 / 1260.0,
            -1.0 / 1680.0,
            1.0 / 1188.0,
        ];
        let mut series = 0.0;
        let mut xp = x;
        for b in B {
            series += b / xp;
            xp *= x * x;
        }
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * core::f64::consts::PI).ln() + series + shift
    }

    #[test]
    fn ln_gamma_matches_stirling_reference() {
        for &x in &[0.5, 1.5, 3.25, 10.0, 64.0, 64.5, 1000.0, 10000.0] {
            let got = ln_gamma(x).unwrap();
            let want = ln_gamma_stirling(x);
            let tol = 1e-12 * want.abs().max(1.0);
            assert!((got - want).abs() < tol, "ln_gamma({x}): {got} vs {want}");
        }
    }

    #[test]
    fn ln_erfc_continuous_across_switchover() {
        for &x in &[24.9f64, 25.0, 25.1, 26.0] {
            let asym = {
                let u = 1.0 / (x * x);
                let series = 1.0 + u * (-0.5 + u * (0.75 + u * (-1.875 + u * 6.5625)));
                -x * x - x.ln() - 0.5 * core::f64::consts::PI.ln() + series.ln()
            };
            assert!((ln_erfc(x) - asym).abs() < 1e-9 * asym.abs());
        }
        // Direct region agrees with plain erfc.
        assert!((ln_erfc(1.0) - erfc(1.0).ln()).abs() < 1e-14);
        assert!((ln_erfc(-3.0) - erfc(-3.0).ln()).abs() < 1e-14);
        // Far tail stays finite.
        assert!(ln_erfc(1.0e6).is_finite());
    }

    #[test]
    fn log_sum_exp_stability() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2.0f64.ln())).abs() < 1e-12);
        let w = [-1.0e6, -1.0e6 + 1.0];
        let expect = -1.0e6 + 1.0 + (1.0 + (-1.0f64).exp()).ln();
        assert!((log_sum_exp(&w) - expect).abs() < 1e-9);
    }

    #[test]
    fn ln_half_erf_sum_matches_direct_when_safe() {
        for &(a, b) in &[(0.5, 0.25), (2.0, -1.0), (-0.3, 0.8), (0.0, 1.0e-3)] {
            let direct = ((erf(a) + erf(b)) / 2.0).ln();
            let got = ln_half_erf_sum(a, b);
            assert!((got - direct).abs() < 1e-10, "({a},{b}): {got} vs {direct}");
        }
        // Deep-tail case where the direct form underflows to ln(0).
        let got = ln_half_erf_sum(-70.0, 71.0);
        assert!(got.is_finite() && got < -4000.0);
    }
}
