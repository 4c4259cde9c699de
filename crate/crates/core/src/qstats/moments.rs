//! Closed-form moment identities of the q-Gaussian and their numerical
//! counterparts by direct quadrature.
//!
//! The numerical routes integrate `x^{2j} p(x)^e` over `[0, X]` adaptively and
//! add the tail `[X, inf)` from the binomial expansion of
//! `(1 + a x^2)^{-E} = (a x^2)^{-E} (1 + 1/(a x^2))^{-E}`, which converges
//! because `X` is chosen with `a X^2 >= max(100, 4E)`.

use super::special::{check_q_range, is_gaussian_limit, ln_cq_unchecked};
use crate::error::{Error, Result};
use crate::quadrature;

const FIVE_THIRDS: f64 = 5.0 / 3.0;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!("beta must be positive and finite, got {beta}")));
    }
    Ok(())
}

/// Ordinary variance `<x^2> = 1/(beta (5 - 3q))`, finite only for `q < 5/3`.
pub fn variance_from_beta(q: f64, beta: f64) -> Result<f64> {
    check_q_range(q)?;
    check_beta(beta)?;
    if q >= FIVE_THIRDS {
        return Err(Error::DivergentMoment {
            q,
            hint: "use the escort (q-)variance or the CDF least-squares estimator".into(),
        });
    }
    Ok(1.0 / (beta * (5.0 - 3.0 * q)))
}

/// Escort second moment `<x^2>_q = int x^2 p^q / int p^q = 1/((3 - q) beta)`.
pub fn q_variance_from_beta(q: f64, beta: f64) -> Result<f64> {
    check_q_range(q)?;
    check_beta(beta)?;
    Ok(1.0 / ((3.0 - q) * beta))
}

/// Solves the moment system `m2 = 1/(beta (5-3q))`, `m2q = 1/((3-q) beta)` for
/// `(q, beta)`.
///
/// The ratio `r = m2/m2q = (3-q)/(5-3q)` gives `q = (5r - 3)/(3r - 1)`, which
/// increases towards `5/3` as `r` grows. Ratios below one (sampling noise
/// around the Gaussian) are clamped to `q = 1`.
pub fn solve_moment_system(m2: f64, m2q: f64) -> Result<(f64, f64)> {
    if !(m2 > 0.0 && m2.is_finite() && m2q > 0.0 && m2q.is_finite()) {
        return Err(Error::domain(format!("moments must be positive and finite (m2 = {m2}, m2q = {m2q})")));
    }
    let r = m2 / m2q;
    let q = if r <= 1.0 { 1.0 } else { (5.0 * r - 3.0) / (3.0 * r - 1.0) };
    if q >= FIVE_THIRDS {
        return Err(Error::DivergentMoment {
            q,
            hint: "implied q is outside the finite-variance range; use the CDF least-squares method".into(),
        });
    }
    Ok((q, 1.0 / ((3.0 - q) * m2q)))
}

/// `int_X^inf x^{2j} (1 + a x^2)^{-E} dx` by the binomial tail expansion.
fn power_tail(j: u32, a: f64, e: f64, x: f64) -> f64 {
    let two_j = 2.0 * j as f64;
    let ax2 = a * x * x;
    let inv = 1.0 / ax2;
    // (a X^2)^{-E} X^{2j+1}, the k = 0 power
    let mut pow = (-e * ax2.ln() + (two_j + 1.0) * x.ln()).exp();
    let mut coef = 1.0; // binom(-E, k), built incrementally
    let mut sum = 0.0;
    for k in 0..2000 {
        let kf = k as f64;
        let term = coef * pow / (2.0 * e + 2.0 * kf - two_j - 1.0);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        coef *= -(e + kf) / (kf + 1.0);
        pow *= inv;
    }
    sum
}

/// `int_{-inf}^{inf} x^{2j} p(x)^e dx` for the q-Gaussian density
/// `p(x) = sqrt(beta) g_q(sqrt(beta) x)`, by quadrature.
pub fn numeric_power_moment(q: f64, beta: f64, j: u32, e: f64) -> Result<f64> {
    check_q_range(q)?;
    check_beta(beta)?;
    if !(e > 0.0) {
        return Err(Error::domain(format!("density exponent must be positive, got {e}")));
    }
    let ln_scale = e * (0.5 * beta.ln() - ln_cq_unchecked(q));
    let scale = ln_scale.exp();
    let two_j = 2 * j as i32;
    let width = 1.0 / beta.sqrt();
    if is_gaussian_limit(q) {
        let f = |x: f64| x.powi(two_j) * (-e * beta * x * x).exp();
        let end = (60.0 / (e * beta)).sqrt() + width * (j as f64).sqrt() * 4.0;
        return Ok(2.0 * scale * integrate_pieces(&f, width, end)?);
    }
    let a = (q - 1.0) * beta;
    let big_e = e / (q - 1.0);
    if 2.0 * big_e - 2.0 * j as f64 - 1.0 <= 0.0 {
        return Err(Error::DivergentMoment {
            q,
            hint: format!("the integral of x^{} p^{e} diverges", 2 * j),
        });
    }
    let end = (100.0_f64.max(4.0 * big_e) / a).sqrt();
    let f = |x: f64| x.powi(two_j) * (-big_e * (a * x * x).ln_1p()).exp();
    let body = integrate_pieces(&f, width, end)?;
    let tail = power_tail(j, a, big_e, end);
    Ok(2.0 * scale * (body + tail))
}

/// Adaptive quadrature over `[0, end]` split into geometrically growing pieces.
fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, width: f64, end: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = width.min(end);
    loop {
        total += quadrature::integrate(f, lo, hi, 1e-300, 1e-13)?.value;
        if hi >= end {
            break;
        }
        lo = hi;
        hi = (2.0 * hi).min(end);
    }
    Ok(total)
}

/// Numerical normalization `int p dx` (should equal one).
pub fn numeric_normalization(q: f64, beta: f64) -> Result<f64> {
    numeric_power_moment(q, beta, 0, 1.0)
}

/// Numerical ordinary variance `int x^2 p dx / int p dx`.
pub fn numeric_variance(q: f64, beta: f64) -> Result<f64> {
    Ok(numeric_power_moment(q, beta, 1, 1.0)? / numeric_power_moment(q, beta, 0, 1.0)?)
}

/// Numerical escort second moment `int x^2 p^q dx / int p^q dx`.
pub fn numeric_q_variance(q: f64, beta: f64) -> Result<f64> {
    let e = if is_gaussian_limit(q) { 1.0 } else { q };
    Ok(numeric_power_moment(q, beta, 1, e)? / numeric_power_moment(q, beta, 0, e)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert!((variance_from_beta(1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((variance_from_beta(1.4, 2.0).unwrap() - 0.625).abs() < 1e-14);
        assert!(matches!(variance_from_beta(2.0, 1.0), Err(Error::DivergentMoment { .. })));
        assert!((q_variance_from_beta(1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((q_variance_from_beta(2.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((q_variance_from_beta(11.0 / 9.0, 0.75).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn moment_system_examples() {
        let (q, b) = solve_moment_system(1.0, 0.75).unwrap();
        assert!((q - 11.0 / 9.0).abs() < 1e-14);
        assert!((b - 0.75).abs() < 1e-14);
        assert!((b * (5.0 - 3.0 * q) - 1.0).abs() < 1e-14);
        let (q, b) = solve_moment_system(0.3, 0.3).unwrap();
        assert_eq!(q, 1.0);
        assert!((b - 1.0 / 0.6).abs() < 1e-14);
        let (q, _) = solve_moment_system(4.0, 1.0).unwrap();
        assert!((q - 17.0 / 11.0).abs() < 1e-14);
        // sub-Gaussian ratios clamp instead of wrapping past the pole at r = 1/3
        assert_eq!(solve_moment_system(0.2, 1.0).unwrap().0, 1.0);
        assert!(solve_moment_system(1e6, 1.0).unwrap().0 < 5.0 / 3.0);
        assert!(matches!(solve_moment_system(1e300, 1.0), Err(Error::DivergentMoment { .. })));
    }

    #[test]
    fn tail_expansion_matches_cauchy() {
        // int_X^inf (1 + x^2)^{-1} dx = pi/2 - atan(X)
        let x = 20.0;
        let t = power_tail(0, 1.0, 1.0, x);
        assert!((t - (std::f64::consts::FRAC_PI_2 - x.atan())).abs() < 1e-15);
    }

    #[test]
    fn divergent_numeric_moment_is_reported() {
        assert!(matches!(numeric_power_moment(2.0, 1.0, 1, 1.0), Err(Error::DivergentMoment { .. })));
    }

    #[test]
    fn quadrature_matches_identities() {
        for &q in &[1.0, 1.2, 1.5, 1.6, 1.8, 2.0, 2.5, 2.9] {
            for &beta in &[0.3, 1.0, 4.0] {
                let norm = numeric_normalization(q, beta).unwrap();
                assert!((norm - 1.0).abs() < 1e-9, "q={q} beta={beta} norm={norm}");
                let qv = numeric_q_variance(q, beta).unwrap();
                let exact = q_variance_from_beta(q, beta).unwrap();
                assert!((qv / exact - 1.0).abs() < 1e-8, "q={q} beta={beta}: {qv} vs {exact}");
                if q < FIVE_THIRDS {
                    let v = numeric_variance(q, beta).unwrap();
                    let exact = variance_from_beta(q, beta).unwrap();
                    assert!((v / exact - 1.0).abs() < 1e-8, "q={q} beta={beta}: {v} vs {exact}");
                }
            }
        }
    }
}
