//! Gauss hypergeometric series and the q-error function built on it.
//!
//! The q-error function has the closed form
//!
//! ```text
//! erf_q(s) = (2 s / C_q) 2F1(1/2, m; 3/2; z),   m = 1/(q-1),  z = (1-q) s^2 <= 0
//! ```
//!
//! Summing that series directly alternates in sign and loses all precision
//! once `m |z|` is large (small `q - 1` or large `s`). Two transformations
//! keep every evaluation on a positive-term series:
//!
//! 1. Pfaff: `2F1(1/2, m; 3/2; z) = (1-z)^{-m} 2F1(1, m; 3/2; u)` with
//!    `u = z/(z-1) in [0, 1)`.
//! 2. Reflection `u -> 1-u`: the complement `1 - erf_q(s)` equals
//!    `x^{m-1/2} u^{1/2} / ((m-1/2) B(m-1/2, 1/2)) 2F1(m, 1; m+1/2; x)` with
//!    `x = 1 - u`, a series that converges geometrically in `x`.
//!
//! Route 1 is used for `u <= 0.5`, route 2 above that. Unlike the `1/z`
//! inversion formula, neither route degenerates when `m - 1/2` is an integer
//! (`q = 5/3`, `q = 1.4`, ...).

use std::f64::consts::LN_10;

use libm::{erf, erfc};

use super::special::{check_q_range, is_gaussian_limit, ln_cq_unchecked};
use crate::error::{Error, Result};

const SERIES_EPS: f64 = 1e-17;
const MAX_TERMS: usize = 10_000_000;
const RESCALE: f64 = 1e250;

/// Direct power series of `2F1(a, b; c; z)`, valid for `|z| < 1`.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(Error::domain(format!("hypergeometric series requires |z| < 1, got {z}")));
    }
    if c <= 0.0 && c == c.floor() {
        return Err(Error::domain(format!("2F1 is undefined for non-positive integer c = {c}")));
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // once the term ratio is below one, the remaining tail is bounded geometrically
        let ratio = ((a + kf + 1.0) * (b + kf + 1.0) / ((c + kf + 1.0) * (kf + 2.0)) * z).abs();
        if ratio < 1.0 && term.abs() * ratio / (1.0 - ratio) < SERIES_EPS * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::numeric(
        "hypergeometric series did not converge",
        format!("a={a}, b={b}, c={c}, z={z}, terms={MAX_TERMS}, partial sum={sum:e}"),
    ))
}

/// Natural log of a positive-term series `sum_k prod_{j<k} ratio(j)`, summed
/// with periodic rescaling so that very large partial sums do not overflow.
/// `limit` is the limit of `ratio(k)` as `k -> inf`; the tail bound uses the
/// larger of it and the next ratio, since the ratios may increase toward it.
fn ln_positive_series<F: Fn(f64) -> f64>(ratio: F, limit: f64, label: &str) -> Result<f64> {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut log_scale = 0.0_f64;
    for k in 0..MAX_TERMS {
        let r = ratio(k as f64);
        term *= r;
        sum += term;
        let next = ratio(k as f64 + 1.0).max(limit);
        if next < 1.0 && term * next / (1.0 - next) < SERIES_EPS * sum {
            return Ok(log_scale + sum.ln());
        }
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            log_scale += 250.0 * LN_10;
        }
    }
    Err(Error::numeric(
        format!("{label} series did not converge"),
        format!("terms={MAX_TERMS}, log partial sum={:e}", log_scale + sum.ln()),
    ))
}

/// Precomputed evaluator of `erf_q` and its complement for a fixed `q`.
#[derive(Debug, Clone, Copy)]
pub struct QErf {
    q: f64,
    /// `1/(q-1)`; unused in the Gaussian limit.
    m: f64,
    ln_cq: f64,
    gaussian: bool,
}

impl QErf {
    pub fn new(q: f64) -> Result<Self> {
        check_q_range(q)?;
        let gaussian = is_gaussian_limit(q);
        let m = if gaussian { f64::INFINITY } else { 1.0 / (q - 1.0) };
        Ok(Self { q, m, ln_cq: ln_cq_unchecked(q), gaussian })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Returns `(erf_q(s), 1 - erf_q(s))` for `s >= 0`.
    fn eval_nonneg(&self, s: f64) -> Result<(f64, f64)> {
        if s == 0.0 {
            return Ok((0.0, 1.0));
        }
        if s == f64::INFINITY {
            return Ok((1.0, 0.0));
        }
        if self.gaussian {
            return Ok((erf(s), erfc(s)));
        }
        let m = self.m;
        let a = (self.q - 1.0) * s * s;
        let u = a / (1.0 + a);
        let x = 1.0 / (1.0 + a);
        if u <= 0.5 && m * u <= 700.0 {
            // Pfaff route, positive terms with ratio (m+k) u / (3/2+k)
            let ln_sum = ln_positive_series(|k| (m + k) / (1.5 + k) * u, u, "Pfaff-transformed 2F1")?;
            let value = ((2.0 * s).ln() - self.ln_cq - m * a.ln_1p() + ln_sum).exp();
            let value = value.min(1.0);
            return Ok((value, 1.0 - value));
        }
        // reflection route: complement as an incomplete beta in x = 1 - u
        let b = m - 0.5;
        let ln_beta = self.ln_cq + 0.5 * (self.q - 1.0).ln();
        let ln_prefactor = b * x.ln() + 0.5 * u.ln() - b.ln() - ln_beta;
        // the series is bounded by 1/(1-x) = 1/u
        if ln_prefactor - u.ln() < -745.0 {
            return Ok((1.0, 0.0));
        }
        let ln_sum = ln_positive_series(|k| (m + k) / (b + 1.0 + k) * x, x, "reflected 2F1")?;
        let comp = (ln_prefactor + ln_sum).exp().min(1.0);
        Ok((1.0 - comp, comp))
    }

    /// `erf_q(s) = 2 int_0^s g_q(y) dy`.
    pub fn erf(&self, s: f64) -> Result<f64> {
        if s.is_nan() {
            return Err(Error::domain("q_erf argument is NaN"));
        }
        let (v, _) = self.eval_nonneg(s.abs())?;
        Ok(v.copysign(s))
    }

    /// `1 - erf_q(s)`, accurate in the far tail.
    pub fn erfc(&self, s: f64) -> Result<f64> {
        if s.is_nan() {
            return Err(Error::domain("q_erfc argument is NaN"));
        }
        let (v, c) = self.eval_nonneg(s.abs())?;
        Ok(if s >= 0.0 { c } else { 1.0 + v })
    }

    /// Solves `1 - erf_q(s) = level` for `s >= 0`, `level` in `(0, 1]`.
    pub fn erfc_inv(&self, level: f64) -> Result<f64> {
        if !(level > 0.0 && level <= 1.0) {
            return Err(Error::domain(format!("tail level must lie in (0, 1], got {level}")));
        }
        if level == 1.0 {
            return Ok(0.0);
        }
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        while self.erfc(hi)? > level {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::numeric("q_erfc inversion failed to bracket", format!("q={}, level={level}", self.q)));
            }
        }
        // Newton on erfc(s) - level with d/ds erfc = -2 g_q(s), falling back to
        // bisection whenever a step leaves the bracket
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.erfc(s)? - level;
            if f > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let slope = -2.0 * self.density(s);
            let mut next = if slope < 0.0 { s - f / slope } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-15 * s.max(1e-300) || hi - lo <= 1e-15 * hi {
                return Ok(next);
            }
            s = next;
        }
        Ok(s)
    }

    /// Standard q-Gaussian density `g_q(s)`.
    pub fn density(&self, s: f64) -> f64 {
        if self.gaussian {
            (-s * s - self.ln_cq).exp()
        } else {
            (-self.m * ((self.q - 1.0) * s * s).ln_1p() - self.ln_cq).exp()
        }
    }
}

/// q-error function `erf_q(s) = 2 int_0^s g_q(y) dy` for `1 <= q < 3`.
///
/// Odd in `s`, bounded by one in magnitude and equal to `erf(s)` at `q = 1`.
pub fn q_erf(s: f64, q: f64) -> Result<f64> {
    QErf::new(q)?.erf(s)
}

/// Complementary q-error function `1 - erf_q(s)`.
pub fn q_erfc(s: f64, q: f64) -> Result<f64> {
    QErf::new(q)?.erfc(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_elementary_closed_forms() {
        // 2F1(1, 1; 2; z) = -ln(1-z)/z
        let z = 0.3;
        let v = hyp2f1_series(1.0, 1.0, 2.0, z).unwrap();
        assert!((v - (-(1.0f64 - z).ln() / z)).abs() < 1e-15);
        // 2F1(1/2, 1; 3/2; -z^2) = atan(z)/z
        let t = 0.8_f64;
        let v = hyp2f1_series(0.5, 1.0, 1.5, -t * t).unwrap();
        assert!((v - t.atan() / t).abs() < 1e-14);
    }

    #[test]
    fn series_rejects_outside_unit_disc() {
        assert!(hyp2f1_series(0.5, 1.0, 1.5, -1.5).is_err());
        assert!(hyp2f1_series(0.5, 1.0, -2.0, 0.1).is_err());
    }

    #[test]
    fn examples() {
        assert_eq!(q_erf(0.0, 1.7).unwrap(), 0.0);
        let e1 = q_erf(1.0, 1.0).unwrap();
        assert!((e1 - 0.842_700_792_949_714_9).abs() < 1e-15, "{e1:.17}");
        assert!((q_erf(1.0, 2.0).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn both_routes_agree_with_direct_series() {
        // in the region |z| < 0.5 the untransformed alternating series is well conditioned
        for &q in &[1.2, 1.5, 2.0, 2.5] {
            let cq = super::super::special::normalization_cq(q).unwrap();
            for &s in &[0.1, 0.4, 0.6] {
                let z = (1.0 - q) * s * s;
                let direct = 2.0 * s / cq * hyp2f1_series(0.5, 1.0 / (q - 1.0), 1.5, z).unwrap();
                let routed = q_erf(s, q).unwrap();
                assert!((direct - routed).abs() < 1e-13, "q={q} s={s}: {direct} vs {routed}");
            }
        }
    }

    #[test]
    fn degenerate_connection_cases_are_smooth() {
        // q = 1.4 and q = 5/3 make the 1/z connection formula singular
        for &q in &[1.4, 5.0 / 3.0] {
            let a = q_erf(3.0, q - 1e-9).unwrap();
            let b = q_erf(3.0, q).unwrap();
            let c = q_erf(3.0, q + 1e-9).unwrap();
            assert!((a - b).abs() < 1e-8 && (b - c).abs() < 1e-8);
        }
    }

    #[test]
    fn complement_in_far_tail() {
        // Cauchy: 1 - (2/pi) atan(s) = (2/pi) atan(1/s)
        let s: f64 = 1e6;
        let expected = 2.0 / std::f64::consts::PI * (1.0 / s).atan();
        let got = q_erfc(s, 2.0).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn inverse_round_trip() {
        for &q in &[1.0, 1.3, 2.0, 2.7] {
            let e = QErf::new(q).unwrap();
            for &level in &[0.9, 0.5, 0.15, 1e-3, 1e-8] {
                let s = e.erfc_inv(level).unwrap();
                let back = e.erfc(s).unwrap();
                assert!(((back - level) / level).abs() < 1e-9, "q={q} level={level}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(q_erf(1.0, 3.0).is_err());
        assert!(q_erf(1.0, 0.5).is_err());
        assert!(q_erf(f64::NAN, 1.5).is_err());
    }
}
