//! Finite-difference check that the self-similar q-Gaussian family solves the
//! nonlinear diffusion equation `t^{1-xi} dp/dt = xi K d2(p^{2-q})/dx2`.
//!
//! For `p = (Dt)^{-1/alpha} g_q(x/(Dt)^{1/alpha})` with `alpha = (3-q)/xi`, the
//! equation holds with `K = C_q^{1-q} D^xi / (2 (2-q) (3-q))`, which reduces to
//! `D^xi/4` at `q = 1`.

use super::special::ln_cq_unchecked;
use super::QParams;
use crate::error::{Error, Result};

/// Residual of the diffusion equation on a grid.
#[derive(Debug, Clone, Copy)]
pub struct PdeResidual {
    /// `max |residual| / max |t^{1-xi} dp/dt|` over interior grid points.
    pub relative: f64,
    pub max_abs: f64,
    pub max_time_term: f64,
    /// Coefficient `K` used for the spatial term.
    pub coefficient: f64,
}

/// Coefficient `K(q, D, xi)` of the spatial term.
pub fn pde_coefficient(q: f64, diffusion: f64, xi: f64) -> Result<f64> {
    if !(q < 2.0) {
        return Err(Error::domain(format!("the diffusion equation needs q < 2, got {q}")));
    }
    let ln_cq = ln_cq_unchecked(q);
    Ok(((1.0 - q) * ln_cq).exp() * diffusion.powf(xi) / (2.0 * (2.0 - q) * (3.0 - q)))
}

fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.len() < 5 {
        return Err(Error::config(format!("{name} grid needs at least 5 points, got {}", g.len())));
    }
    if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(format!("{name} grid must be finite and strictly increasing")));
    }
    Ok(())
}

/// First and second derivative weights for the three-point stencil with
/// spacings `h1` (left) and `h2` (right).
#[inline]
fn stencil(fm: f64, f0: f64, fp: f64, h1: f64, h2: f64) -> (f64, f64) {
    let d1 = (h1 * h1 * fp - h2 * h2 * fm + (h2 * h2 - h1 * h1) * f0) / (h1 * h2 * (h1 + h2));
    let d2 = 2.0 * ((fp - f0) / h2 - (f0 - fm) / h1) / (h1 + h2);
    (d1, d2)
}

/// Evaluates the residual of the diffusion equation for the density family
/// described by `params` (which must carry `xi`) using central differences
/// on possibly non-uniform grids.
pub fn pde_residual(params: &QParams, x_grid: &[f64], t_grid: &[f64]) -> Result<PdeResidual> {
    check_grid("x", x_grid)?;
    check_grid("t", t_grid)?;
    if t_grid[0] <= 0.0 {
        return Err(Error::config("t grid must be positive"));
    }
    let xi = params
        .xi
        .ok_or_else(|| Error::config("the temporal exponent xi must be set for the residual check"))?;
    let q = params.q;
    let k = pde_coefficient(q, params.diffusion, xi)?;
    let nx = x_grid.len();
    let nt = t_grid.len();
    // density on the grid, row per time
    let mut p = vec![0.0; nx * nt];
    for (j, &t) in t_grid.iter().enumerate() {
        let dist = params.distribution_at(t)?;
        for (i, &x) in x_grid.iter().enumerate() {
            p[j * nx + i] = dist.pdf(x);
        }
    }
    let power = 2.0 - q;
    let mut max_abs = 0.0_f64;
    let mut max_time = 0.0_f64;
    for j in 1..nt - 1 {
        let (t, h1t, h2t) = (t_grid[j], t_grid[j] - t_grid[j - 1], t_grid[j + 1] - t_grid[j]);
        let time_factor = t.powf(1.0 - xi);
        for i in 1..nx - 1 {
            let (h1x, h2x) = (x_grid[i] - x_grid[i - 1], x_grid[i + 1] - x_grid[i]);
            let (dp_dt, _) = stencil(p[(j - 1) * nx + i], p[j * nx + i], p[(j + 1) * nx + i], h1t, h2t);
            let u = |ii: usize| p[j * nx + ii].powf(power);
            let (_, d2u) = stencil(u(i - 1), u(i), u(i + 1), h1x, h2x);
            let lhs = time_factor * dp_dt;
            let r = lhs - xi * k * d2u;
            max_abs = max_abs.max(r.abs());
            max_time = max_time.max(lhs.abs());
        }
    }
    if !(max_time > 0.0) {
        return Err(Error::numeric("time derivative vanishes on the grid", format!("max |t^(1-xi) dp/dt| = {max_time}")));
    }
    Ok(PdeResidual { relative: max_abs / max_time, max_abs, max_time_term: max_time, coefficient: k })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn stencil_is_exact_for_quadratics() {
        let f = |x: f64| 3.0 * x * x - 2.0 * x + 1.0;
        let (d1, d2) = stencil(f(0.7), f(1.0), f(1.5), 0.3, 0.5);
        assert!((d1 - 4.0).abs() < 1e-12);
        assert!((d2 - 6.0).abs() < 1e-12);
    }

    #[test]
    fn heat_equation_residual_is_small() {
        let p = QParams::from_xi(1.0, 2.0, 1.0).unwrap();
        let r = pde_residual(&p, &grid(-4.0, 4.0, 201), &grid(1.0, 2.0, 201)).unwrap();
        assert!(r.relative < 1e-3, "{}", r.relative);
        assert!((r.coefficient - 0.25).abs() < 1e-15);
    }

    #[test]
    fn second_order_convergence() {
        let p = QParams::from_xi(1.5, 1.0, 1.0).unwrap();
        let coarse = pde_residual(&p, &grid(-4.0, 4.0, 101), &grid(1.0, 2.0, 101)).unwrap();
        let fine = pde_residual(&p, &grid(-4.0, 4.0, 201), &grid(1.0, 2.0, 201)).unwrap();
        let ratio = coarse.relative / fine.relative;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn mismatched_alpha_does_not_converge() {
        let mut p = QParams::from_xi(1.3, 1.5, 1.0).unwrap();
        p.alpha *= 1.1;
        let r = pde_residual(&p, &grid(-4.0, 4.0, 201), &grid(1.0, 2.0, 201)).unwrap();
        assert!(r.relative > 0.05, "{}", r.relative);
    }

    #[test]
    fn coarse_grid_and_missing_xi_rejected() {
        let p = QParams::from_xi(1.3, 1.5, 1.0).unwrap();
        assert!(matches!(pde_residual(&p, &grid(-1.0, 1.0, 4), &grid(1.0, 2.0, 10)), Err(Error::Config(_))));
        let no_xi = QParams::new(1.3, 1.0, 1.0).unwrap();
        assert!(pde_residual(&no_xi, &grid(-1.0, 1.0, 10), &grid(1.0, 2.0, 10)).is_err());
    }
}
