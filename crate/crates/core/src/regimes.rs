//! Segmentation of the horizon axis into three diffusion zones.
//!
//! `ln beta` versus `ln t` is fitted by a continuous piecewise-linear model with
//! two knots placed on grid points,
//! `y = a + m x + d1 (x - k1)_+ + d2 (x - k2)_+`, searching every knot pair.
//! Each pair costs O(1) through suffix sums, so the search is exact.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::ParameterCurves;

/// Diffusion zone of a horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ZoneLabel {
    /// Strong superdiffusion (shortest lags).
    A,
    /// Weak superdiffusion.
    B,
    /// Normal diffusion (longest lags).
    C,
    /// Transition between zones.
    Crossover,
}

impl ZoneLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ZoneLabel::A => "A",
            ZoneLabel::B => "B",
            ZoneLabel::C => "C",
            ZoneLabel::Crossover => "crossover",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(ZoneLabel::A),
            "B" => Ok(ZoneLabel::B),
            "C" => Ok(ZoneLabel::C),
            "crossover" => Ok(ZoneLabel::Crossover),
            other => Err(Error::config(format!("unknown zone label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneConfig {
    /// Smallest slope change of `ln beta` versus `ln t` accepted as a break.
    pub min_slope_change: f64,
    /// Grid points on each side of a break labeled as crossover.
    pub crossover_points: usize,
    /// Minimum number of grid points in each zone.
    pub min_segment_points: usize,
    pub zone_c_alpha_tol: f64,
    pub zone_c_q_tol: f64,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        Self {
            min_slope_change: 0.02,
            crossover_points: 1,
            min_segment_points: 3,
            zone_c_alpha_tol: 0.05,
            zone_c_q_tol: 0.05,
        }
    }
}

/// Result of the normal-diffusion check on zone C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneCheck {
    pub mean_alpha: f64,
    pub mean_q: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSegmentation {
    /// Sorted horizons the segmentation was computed on.
    pub horizons: Vec<f64>,
    pub labels: Vec<ZoneLabel>,
    /// Horizons of the two breaks.
    pub boundaries: [f64; 2],
    /// Grid positions of the two breaks.
    pub break_indices: [usize; 2],
    /// Slopes of `ln beta` versus `ln t` in zones A, B, C.
    pub slopes: [f64; 3],
    pub residual_sum_squares: f64,
    /// Horizon intervals labeled crossover.
    pub crossovers: Vec<(f64, f64)>,
    pub zone_c_check: Option<ZoneCheck>,
}

impl ZoneSegmentation {
    /// Start positions of the three segments; the break point opens the
    /// following segment.
    pub fn segment_starts(&self) -> [usize; 3] {
        [0, self.break_indices[0], self.break_indices[1]]
    }

    /// Scaling exponents `alpha = -2/slope` implied by the zone slopes.
    pub fn zone_alphas(&self) -> [f64; 3] {
        self.slopes.map(|m| -2.0 / m)
    }

    /// Zone of an arbitrary horizon (by position relative to the breaks).
    pub fn zone_of(&self, t: f64) -> ZoneLabel {
        if t < self.boundaries[0] {
            ZoneLabel::A
        } else if t < self.boundaries[1] {
            ZoneLabel::B
        } else {
            ZoneLabel::C
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Sums {
    n: f64,
    x: f64,
    xx: f64,
    y: f64,
    xy: f64,
}

/// Residual sum of squares and coefficients of the two-knot model with
/// knots at grid positions `i < j`.
fn hinge_fit(xs: &[f64], suffix: &[Sums], total: &Sums, yy: f64, i: usize, j: usize) -> Option<(f64, [f64; 4])> {
    let (k1, k2) = (xs[i], xs[j]);
    let (s1, s2) = (&suffix[i], &suffix[j]);
    // sums of u = (x - k1)_+ and v = (x - k2)_+ against 1, x, u, v, y
    let su = s1.x - k1 * s1.n;
    let sux = s1.xx - k1 * s1.x;
    let suu = s1.xx - 2.0 * k1 * s1.x + k1 * k1 * s1.n;
    let suy = s1.xy - k1 * s1.y;
    let sv = s2.x - k2 * s2.n;
    let svx = s2.xx - k2 * s2.x;
    let svv = s2.xx - 2.0 * k2 * s2.x + k2 * k2 * s2.n;
    let svy = s2.xy - k2 * s2.y;
    let suv = s2.xx - (k1 + k2) * s2.x + k1 * k2 * s2.n;
    let a = [
        [total.n, total.x, su, sv],
        [total.x, total.xx, sux, svx],
        [su, sux, suu, suv],
        [sv, svx, suv, svv],
    ];
    let b = [total.y, total.xy, suy, svy];
    let c = solve4(a, b)?;
    let explained: f64 = c.iter().zip(&b).map(|(ci, bi)| ci * bi).sum();
    Some(((yy - explained).max(0.0), c))
}

/// Gaussian elimination with partial pivoting on a 4x4 system.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for r in (0..4).rev() {
        let s: f64 = (r + 1..4).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Splits the horizon axis at the two slope changes of `ln beta` versus
/// `ln t` that minimize the residual of a continuous two-knot fit.
///
/// The input need not be sorted. Fails with the best candidates when either
/// slope change is below `config.min_slope_change`.
pub fn detect_zones(horizons: &[f64], betas: &[f64], config: &ZoneConfig) -> Result<ZoneSegmentation> {
    if horizons.len() != betas.len() {
        return Err(Error::config("horizon and beta columns differ in length"));
    }
    let mut pairs: Vec<(f64, f64)> = horizons.iter().copied().zip(betas.iter().copied()).collect();
    if pairs.iter().any(|&(t, b)| !(t > 0.0 && t.is_finite() && b > 0.0 && b.is_finite())) {
        return Err(Error::domain("horizons and betas must be positive and finite"));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs.windows(2).any(|w| w[1].0 == w[0].0) {
        return Err(Error::config("duplicate horizon in the parameter table"));
    }
    let n = pairs.len();
    let min_seg = config.min_segment_points.max(2);
    if n < 8 || n < 3 * min_seg {
        return Err(Error::config(format!("zone detection needs at least {} horizons, got {n}", 8.max(3 * min_seg))));
    }
    if pairs[n - 1].0 / pairs[0].0 < 100.0 {
        return Err(Error::config("zone detection needs horizons spanning at least two decades"));
    }
    // centered coordinates keep the normal equations well conditioned
    let raw_x: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let raw_y: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = raw_x.iter().sum::<f64>() / n as f64;
    let my = raw_y.iter().sum::<f64>() / n as f64;
    let xs: Vec<f64> = raw_x.iter().map(|x| x - mx).collect();
    let ys: Vec<f64> = raw_y.iter().map(|y| y - my).collect();
    let mut suffix = vec![Sums::default(); n + 1];
    for k in (0..n).rev() {
        let s = suffix[k + 1];
        suffix[k] = Sums { n: s.n + 1.0, x: s.x + xs[k], xx: s.xx + xs[k] * xs[k], y: s.y + ys[k], xy: s.xy + xs[k] * ys[k] };
    }
    let total = suffix[0];
    let yy: f64 = ys.iter().map(|y| y * y).sum();

    // knot positions: zone A covers 0..=i, B covers i..=j, C covers j..n
    let first = min_seg - 1;
    let last = n - min_seg;
    let best = (first..=last)
        .into_par_iter()
        .filter_map(|i| {
            let mut local: Option<(f64, usize, usize, [f64; 4])> = None;
            for j in i + min_seg - 1..=last {
                if let Some((rss, c)) = hinge_fit(&xs, &suffix, &total, yy, i, j) {
                    if local.as_ref().map_or(true, |l| rss < l.0) {
                        local = Some((rss, i, j, c));
                    }
                }
            }
            local
        })
        .reduce_with(|a, b| {
            if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                b
            } else {
                a
            }
        })
        .ok_or_else(|| Error::numeric("no admissible break pair", format!("{n} horizons")))?;
    let (_, i, j, c) = best;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let fit = c[0] + c[1] * x + c[2] * (x - xs[i]).max(0.0) + c[3] * (x - xs[j]).max(0.0);
            (y - fit).powi(2)
        })
        .sum();
    let slopes = [c[1], c[1] + c[2], c[1] + c[2] + c[3]];
    let boundaries = [pairs[i].0, pairs[j].0];
    if c[2].abs() < config.min_slope_change || c[3].abs() < config.min_slope_change {
        let mut candidates = Vec::new();
        if c[2].abs() >= config.min_slope_change {
            candidates.push(boundaries[0]);
        }
        if c[3].abs() >= config.min_slope_change {
            candidates.push(boundaries[1]);
        }
        return Err(Error::Segmentation {
            message: format!(
                "fewer than two slope changes of at least {} (best pair at t = {} and {} with changes {:.4} and {:.4})",
                config.min_slope_change, boundaries[0], boundaries[1], c[2], c[3]
            ),
            candidates,
        });
    }
    let sorted_h: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let w = config.crossover_points;
    let labels: Vec<ZoneLabel> = (0..n)
        .map(|k| {
            if k.abs_diff(i) <= w && w > 0 || k.abs_diff(j) <= w && w > 0 {
                ZoneLabel::Crossover
            } else if k < i {
                ZoneLabel::A
            } else if k < j {
                ZoneLabel::B
            } else {
                ZoneLabel::C
            }
        })
        .collect();
    let mut crossovers = Vec::new();
    let mut k = 0;
    while k < n {
        if labels[k] == ZoneLabel::Crossover {
            let start = k;
            while k + 1 < n && labels[k + 1] == ZoneLabel::Crossover {
                k += 1;
            }
            crossovers.push((sorted_h[start], sorted_h[k]));
        }
        k += 1;
    }
    Ok(ZoneSegmentation {
        horizons: sorted_h,
        labels,
        boundaries,
        break_indices: [i, j],
        slopes,
        residual_sum_squares: rss,
        crossovers,
        zone_c_check: None,
    })
}

/// Segments a parameter table by its `beta` column and checks that zone C
/// is close to normal diffusion.
pub fn detect_zones_in_curves(curves: &ParameterCurves, config: &ZoneConfig) -> Result<ZoneSegmentation> {
    let h: Vec<f64> = curves.points.iter().map(|p| p.horizon).collect();
    let b: Vec<f64> = curves.points.iter().map(|p| p.beta).collect();
    let mut seg = detect_zones(&h, &b, config)?;
    seg.zone_c_check = check_zone_c(&seg, curves, config);
    Ok(seg)
}

/// Mean `alpha` and `q` over the zone C points against the normal-diffusion
/// limits `alpha = 2`, `q = 1`.
pub fn check_zone_c(seg: &ZoneSegmentation, curves: &ParameterCurves, config: &ZoneConfig) -> Option<ZoneCheck> {
    let pts: Vec<_> = curves
        .points
        .iter()
        .filter(|p| seg.labels.get(seg.horizons.partition_point(|&h| h < p.horizon)) == Some(&ZoneLabel::C))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let mean_alpha = pts.iter().map(|p| p.alpha).sum::<f64>() / pts.len() as f64;
    let mean_q = pts.iter().map(|p| p.q).sum::<f64>() / pts.len() as f64;
    let passes = (mean_alpha - 2.0).abs() <= config.zone_c_alpha_tol && (mean_q - 1.0).abs() <= config.zone_c_q_tol;
    Some(ZoneCheck { mean_alpha, mean_q, passes })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `ln beta` continuous piecewise linear in `ln t` with the given slopes.
    fn profile(ts: &[f64], slopes: [f64; 3], breaks: [f64; 2]) -> Vec<f64> {
        ts.iter()
            .map(|&t| {
                let x = t.ln();
                let (b1, b2) = (breaks[0].ln(), breaks[1].ln());
                let y = slopes[0] * x.min(b1)
                    + slopes[1] * (x.min(b2) - b1).max(0.0)
                    + slopes[2] * (x - b2).max(0.0);
                (y - 4.0).exp()
            })
            .collect()
    }

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp()).collect()
    }

    #[test]
    fn exact_breaks_on_grid() {
        let ts = grid(61, 1.0, 1e6);
        let b = profile(&ts, [-1.23, -1.10, -1.0], [ts[15], ts[44]]);
        let seg = detect_zones(&ts, &b, &ZoneConfig::default()).unwrap();
        assert_eq!(seg.break_indices, [15, 44]);
        assert_eq!(seg.boundaries, [ts[15], ts[44]]);
        assert!((seg.slopes[0] + 1.23).abs() < 1e-9 && (seg.slopes[2] + 1.0).abs() < 1e-9);
        assert!(seg.residual_sum_squares < 1e-18);
        let alphas = seg.zone_alphas();
        assert!((alphas[2] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn single_power_law_is_rejected() {
        let ts = grid(40, 1.0, 1e4);
        let b: Vec<f64> = ts.iter().map(|t| t.powf(-1.1)).collect();
        match detect_zones(&ts, &b, &ZoneConfig::default()) {
            Err(Error::Segmentation { candidates, .. }) => assert!(candidates.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn labels_are_ordered_and_crossovers_marked() {
        let ts = grid(50, 1.0, 1e5);
        let b = profile(&ts, [-1.3, -1.1, -1.0], [ts[12], ts[35]]);
        let seg = detect_zones(&ts, &b, &ZoneConfig { crossover_points: 2, ..Default::default() }).unwrap();
        let order: Vec<ZoneLabel> = seg.labels.iter().copied().filter(|l| *l != ZoneLabel::Crossover).collect();
        assert!(order.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(seg.crossovers, vec![(ts[10], ts[14]), (ts[33], ts[37])]);
        assert_eq!(seg.zone_of(ts[0]), ZoneLabel::A);
        assert_eq!(seg.zone_of(ts[49]), ZoneLabel::C);
    }

    #[test]
    fn input_validation() {
        let ts = grid(7, 1.0, 1e3);
        assert!(detect_zones(&ts, &vec![1.0; 7], &ZoneConfig::default()).is_err());
        let ts = grid(20, 1.0, 50.0);
        assert!(detect_zones(&ts, &vec![1.0; 20], &ZoneConfig::default()).is_err());
        let mut ts = grid(20, 1.0, 1e3);
        ts[3] = ts[2];
        assert!(detect_zones(&ts, &vec![1.0; 20], &ZoneConfig::default()).is_err());
    }

    #[test]
    fn solve4_matches_known_solution() {
        let a = [[4.0, 1.0, 0.0, 0.0], [1.0, 3.0, 1.0, 0.0], [0.0, 1.0, 2.0, 1.0], [0.0, 0.0, 1.0, 5.0]];
        let x = [1.0, -2.0, 3.0, 0.5];
        let b: Vec<f64> = a.iter().map(|r| r.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
        let s = solve4(a, [b[0], b[1], b[2], b[3]]).unwrap();
        for k in 0..4 {
            assert!((s[k] - x[k]).abs() < 1e-12);
        }
    }
}
