//! q-deformed elementary functions and the q-Gaussian normalization constant.

use std::f64::consts::PI;

use libm::lgamma as ln_gamma;

use crate::error::{Error, Result};

/// Distance from `q = 1` inside which the Gaussian limit branches are used.
pub const Q_LIMIT_TOL: f64 = 1e-8;

#[inline]
pub(crate) fn is_gaussian_limit(q: f64) -> bool {
    (q - 1.0).abs() < Q_LIMIT_TOL
}

/// q-exponential `e_q(x) = [1 + (1-q) x]^{1/(1-q)}`.
///
/// For `q < 1` the function is cut off to zero where `1 + (1-q) x <= 0`.
/// For `q > 1` it has a pole at `x = 1/(q-1)` and larger `x` is rejected.
/// Inside `|q - 1| < Q_LIMIT_TOL` the second-order expansion of
/// `ln e_q(x)` around `q = 1` is used, which reduces to `exp(x)` at `q = 1`.
pub fn q_exponential(x: f64, q: f64) -> Result<f64> {
    if !x.is_finite() || !q.is_finite() {
        return Err(Error::domain(format!("q_exponential requires finite arguments (x = {x}, q = {q})")));
    }
    if q <= 0.0 || q >= 3.0 {
        return Err(Error::domain(format!("q_exponential requires q in (0, 3), got {q}")));
    }
    let d = 1.0 - q;
    if is_gaussian_limit(q) {
        return Ok((x * (1.0 - 0.5 * d * x)).exp());
    }
    let base = d * x;
    if base <= -1.0 {
        if q < 1.0 {
            return Ok(0.0);
        }
        return Err(Error::domain(format!(
            "q_exponential diverges for x >= 1/(q-1) (x = {x}, q = {q})"
        )));
    }
    Ok((base.ln_1p() / d).exp())
}

/// q-logarithm `ln_q(x) = (x^{1-q} - 1)/(1-q)`, the inverse of [`q_exponential`].
pub fn q_logarithm(x: f64, q: f64) -> Result<f64> {
    if !(x > 0.0) || !q.is_finite() {
        return Err(Error::domain(format!("q_logarithm requires x > 0 (x = {x}, q = {q})")));
    }
    Ok(q_log_unchecked(x, q))
}

#[inline]
pub(crate) fn q_log_unchecked(x: f64, q: f64) -> f64 {
    let d = 1.0 - q;
    let lx = x.ln();
    if d.abs() < Q_LIMIT_TOL {
        lx * (1.0 + 0.5 * d * lx)
    } else {
        (d * lx).exp_m1() / d
    }
}

/// `ln Γ(z - 1/2) - ln Γ(z)` for `z > 1/2`.
///
/// For large `z` the difference of two large log-gammas cancels badly, so the
/// Stirling series is subtracted term by term instead.
pub(crate) fn ln_gamma_ratio_half(z: f64) -> f64 {
    if z < 10.0 {
        return ln_gamma(z - 0.5) - ln_gamma(z);
    }
    fn stirling_tail(z: f64) -> f64 {
        let r = 1.0 / z;
        let r2 = r * r;
        r * (1.0 / 12.0
            + r2 * (-1.0 / 360.0
                + r2 * (1.0 / 1260.0
                    + r2 * (-1.0 / 1680.0 + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360_360.0))))))
    }
    -0.5 * z.ln() + (z - 1.0) * (-0.5 / z).ln_1p() + 0.5 + stirling_tail(z - 0.5) - stirling_tail(z)
}

/// Natural log of the normalization constant `C_q` for `1 < q < 3`.
pub(crate) fn ln_cq_unchecked(q: f64) -> f64 {
    if is_gaussian_limit(q) {
        return 0.5 * PI.ln();
    }
    let m = 1.0 / (q - 1.0);
    0.5 * (PI / (q - 1.0)).ln() + ln_gamma_ratio_half(m)
}

/// Normalization constant `C_q = sqrt(pi/(q-1)) Γ((3-q)/(2(q-1))) / Γ(1/(q-1))`
/// of the q-Gaussian `g_q(x) = e_q(-x^2)/C_q`, valid for `1 <= q < 3`
/// (with `C_1 = sqrt(pi)`).
pub fn normalization_cq(q: f64) -> Result<f64> {
    check_q_range(q)?;
    Ok(ln_cq_unchecked(q).exp())
}

pub(crate) fn check_q_range(q: f64) -> Result<()> {
    if !q.is_finite() || q < 1.0 - Q_LIMIT_TOL || q >= 3.0 {
        return Err(Error::domain(format!(
            "entropic index must satisfy 1 <= q < 3 for a normalizable q-Gaussian, got {q}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_exponential_examples() {
        assert_eq!(q_exponential(0.0, 1.5).unwrap(), 1.0);
        assert!((q_exponential(-1.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((q_exponential(1.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn q_exponential_cutoff_and_pole() {
        assert_eq!(q_exponential(-5.0, 0.5).unwrap(), 0.0);
        assert!(q_exponential(2.0, 2.0).is_err());
        assert!(q_exponential(f64::NAN, 1.2).is_err());
        assert!(q_exponential(1.0, 3.0).is_err());
    }

    #[test]
    fn q_exponential_is_continuous_across_limit_switch() {
        for &x in &[-3.0, -1.0, 0.5, 1.0, 2.0] {
            let inside = q_exponential(x, 1.0 + 0.999_999 * Q_LIMIT_TOL).unwrap();
            let outside = q_exponential(x, 1.0 + 1.000_001 * Q_LIMIT_TOL).unwrap();
            assert!((inside - outside).abs() < 1e-9 * x.exp().max(1.0));
            let exact = q_exponential(x, 1.0).unwrap();
            assert!((exact - x.exp()).abs() < 1e-15 * x.exp());
        }
    }

    #[test]
    fn q_logarithm_inverts_q_exponential() {
        for &q in &[0.5, 1.0, 1.3, 2.5] {
            for &x in &[-0.4, 0.1, 0.6] {
                let e = q_exponential(x, q).unwrap();
                assert!((q_logarithm(e, q).unwrap() - x).abs() < 1e-13, "q={q} x={x}");
            }
        }
    }

    #[test]
    fn cq_examples() {
        assert!((normalization_cq(1.0).unwrap() - PI.sqrt()).abs() < 1e-15);
        assert!((normalization_cq(2.0).unwrap() - PI).abs() < 1e-10);
        assert!(normalization_cq(3.0).is_err());
        assert!(normalization_cq(0.9).is_err());
    }

    #[test]
    fn gamma_ratio_branches_agree() {
        for &z in &[10.0, 12.5, 30.0, 80.0] {
            let direct = ln_gamma(z - 0.5) - ln_gamma(z);
            assert!((ln_gamma_ratio_half(z) - direct).abs() < 1e-12, "z={z}");
        }
        // large-z limit: Γ(z-1/2)/Γ(z) ~ z^{-1/2} (1 + 3/(8z))
        let z: f64 = 1e8;
        let approx = -0.5 * z.ln() + (3.0 / (8.0 * z)).ln_1p();
        assert!((ln_gamma_ratio_half(z) - approx).abs() < 1e-15);
    }

    #[test]
    fn cq_approaches_sqrt_pi() {
        let c = normalization_cq(1.0 + 1e-6).unwrap();
        assert!((c - PI.sqrt()).abs() < 1e-5);
    }
}
