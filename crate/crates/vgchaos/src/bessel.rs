//! Modified Bessel function of the second kind `K_nu` for `nu >= 0`,
//! `x > 0`.
//!
//! Two routes, glued at `x = ASYMPTOTIC_CROSSOVER`:
//!
//! - moderate `x`: adaptive quadrature of the integral representation
//!   `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`, evaluated in the
//!   scaled form `e^x K_nu(x)` so large `x` cannot underflow inside the
//!   integrand;
//! - large `x`: the standard asymptotic series
//!   `e^x K_nu(x) ~ sqrt(pi/(2x)) (1 + sum_k a_k(nu) / x^k)` truncated at
//!   its smallest term.
//!
//! The quadrature route doubles as the reference oracle for the series;
//! the two must agree at the crossover (pinned by a test).

use crate::error::{Result, VgError};
use crate::gamma::ln_gamma;
use crate::quad::adaptive_simpson_panels;

/// Above this order the integral representation needs a treatment of the
/// oscillating balance between `cosh(nu t)` growth and `exp(-x cosh t)`
/// decay that this crate does not implement.
pub const MAX_ORDER: f64 = 60.0;

/// Quadrature below, asymptotic series above.
pub const ASYMPTOTIC_CROSSOVER: f64 = 40.0;

/// `K_nu(x)`.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    let scaled = bessel_k_scaled(nu, x)?;
    Ok(scaled * (-x).exp())
}

/// `e^x K_nu(x)`; stable for every admissible `x`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(VgError::BesselRange {
            nu,
            x,
            reason: "argument must be positive",
        });
    }
    if !(0.0..=MAX_ORDER).contains(&nu) {
        return Err(VgError::BesselRange {
            nu,
            x,
            reason: "order outside supported range",
        });
    }
    // Small-x overflow guard: K_nu(x) ~ Gamma(nu)/2 (2/x)^nu for nu > 0.
    if nu > 0.0 {
        let ln_k = ln_gamma(nu) - std::f64::consts::LN_2 + nu * (2.0 / x).ln();
        if ln_k + x > 708.0 {
            return Err(VgError::BesselRange {
                nu,
                x,
                reason: "result overflows f64",
            });
        }
    }
    if x >= ASYMPTOTIC_CROSSOVER {
        asymptotic_scaled(nu, x)
    } else {
        Ok(quadrature_scaled(nu, x))
    }
}

/// Scaled integral representation evaluated by adaptive Simpson.
pub fn quadrature_scaled(nu: f64, x: f64) -> f64 {
    // Integrand of e^x K_nu(x): exp(-x (cosh t - 1)) cosh(nu t).
    let g = |t: f64| (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    // Truncate where the log-integrand has dropped below -60.
    let log_g = |t: f64| -x * (t.cosh() - 1.0) + ln_cosh(nu * t);
    let mut t_hi = 1.0;
    while log_g(t_hi) > -60.0 && t_hi < 1e4 {
        t_hi *= 1.5;
    }
    // Relative tolerance against a crude scale estimate.
    let scale = g(0.0).max(g(0.5 * t_hi));
    adaptive_simpson_panels(&g, 0.0, t_hi, 1e-14 * scale * t_hi, 48, 16)
}

fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    if a > 30.0 {
        a - std::f64::consts::LN_2
    } else {
        a.cosh().ln()
    }
}

/// Large-argument series for `e^x K_nu(x)`, truncated at the smallest term.
fn asymptotic_scaled(nu: f64, x: f64) -> Result<f64> {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if term.abs() >= prev {
            break; // divergence point of the asymptotic series
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    if prev > 1e-13 * sum.abs() {
        return Err(VgError::BesselRange {
            nu,
            x,
            reason: "asymptotic series does not reach tolerance",
        });
    }
    Ok((std::f64::consts::PI / (2.0 * x)).sqrt() * sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Closed form: K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}.
    fn k_half(x: f64) -> f64 {
        (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp()
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[0.3, 1.0, 2.5, 10.0, 39.0, 41.0, 120.0] {
            let v = bessel_k(0.5, x).unwrap();
            assert!(
                (v - k_half(x)).abs() <= 1e-12 * k_half(x),
                "x={x}: {v} vs {}",
                k_half(x)
            );
        }
    }

    #[test]
    fn three_halves_closed_form() {
        // K_{3/2}(x) = sqrt(pi/(2x)) e^{-x} (1 + 1/x).
        for &x in &[0.5, 1.0, 4.0, 50.0] {
            let expect = k_half(x) * (1.0 + 1.0 / x);
            let v = bessel_k(1.5, x).unwrap();
            assert!((v - expect).abs() <= 1e-12 * expect, "x={x}");
        }
    }

    #[test]
    fn reference_values() {
        // mpmath, 20 digits.
        let cases = [
            (0.5, 1.0, 0.461_068_504_447_894_56),
            (0.0, 10.0, 1.778_006_231_616_765_2e-5),
            (1.5, 2.5, 0.091_092_320_415_613_985),
            (4.5, 0.7, 632.719_334_349_260_1),
            (0.0, 1.0, 0.421_024_438_240_708_33),
            (2.0, 0.05, 799.501_207_064_772_2),
            (1.0, 25.0, 3.532_778_073_199_933_8e-12),
            (0.25, 3.0, 0.035_057_056_089_413_134),
        ];
        for (nu, x, expect) in cases {
            let v = bessel_k(nu, x).unwrap();
            assert!(
                (v - expect).abs() <= 1e-12 * expect,
                "K({nu},{x}) = {v}, expected {expect}"
            );
        }
    }

    #[test]
    fn recurrence_consistency() {
        // K_{nu+1}(x) = K_{nu-1}(x) + (2 nu / x) K_nu(x).
        for &(nu, x) in &[(1.0, 0.8), (1.75, 3.0), (2.5, 12.0)] {
            let lhs = bessel_k(nu + 1.0, x).unwrap();
            let rhs = bessel_k(nu - 1.0, x).unwrap() + 2.0 * nu / x * bessel_k(nu, x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs(), "nu={nu} x={x}");
        }
    }

    #[test]
    fn decreasing_in_x() {
        assert!(bessel_k(0.0, 1.0).unwrap() > bessel_k(0.0, 2.0).unwrap());
    }

    #[test]
    fn crossover_continuity() {
        // The two routes must agree where they meet.
        for &nu in &[0.0, 0.5, 2.0, 4.5] {
            let q = quadrature_scaled(nu, ASYMPTOTIC_CROSSOVER);
            let s = bessel_k_scaled(nu, ASYMPTOTIC_CROSSOVER).unwrap();
            assert!((q - s).abs() <= 1e-12 * s, "nu={nu}: {q} vs {s}");
        }
    }

    #[test]
    fn range_errors() {
        assert!(bessel_k(0.5, 0.0).is_err());
        assert!(bessel_k(0.5, -1.0).is_err());
        assert!(bessel_k(61.0, 1.0).is_err());
        // Tiny x with large order overflows.
        assert!(bessel_k(50.0, 1e-300).is_err());
    }
}
