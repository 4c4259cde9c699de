use proptest::prelude::*;
use qcone_core::decompose::{detrend, moving_average, IndexSeries};
use qcone_core::estimate::{FitMethod, FitQuality, ParameterCurves, QFit};
use qcone_core::qstats::{
    q_erf, q_exponential, q_logarithm, q_variance_from_beta, solve_moment_system, variance_from_beta, QGaussian,
};
use qcone_core::quadrature::integrate;
use qcone_core::regimes::{detect_zones, ZoneConfig};
use qcone_core::trend_forecast::{forecast_cone, ConeOptions, TrendModel};

fn curves(q: f64, alpha: f64, d: f64) -> ParameterCurves {
    let fits: Vec<QFit> = (0..30)
        .map(|k| 1.3_f64.powi(k))
        .map(|h| QFit {
            method: FitMethod::CdfLeastSquares,
            horizon: h,
            q,
            beta: (d * h).powf(-2.0 / alpha),
            q_se: 0.0,
            beta_se: 0.0,
            residual_rms: 0.0,
            misfit: 0.0,
            quality: FitQuality::Good,
            iterations: 0,
        })
        .collect();
    ParameterCurves::from_fits(&fits, 3, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_erf_matches_integrated_density(q in 1.0..2.95_f64, s in 0.0..20.0_f64) {
        let g = QGaussian::new(q, 1.0).unwrap();
        let quad = 2.0 * integrate(|x| g.pdf(x), 0.0, s, 1e-14, 1e-12).unwrap().value;
        let erf = q_erf(s, q).unwrap();
        prop_assert!((erf - quad).abs() < 1e-8, "q={q} s={s}: {erf} vs {quad}");
    }

    #[test]
    fn cdf_is_monotone_and_symmetric(q in 1.0..2.95_f64, beta in 1e-3..1e3_f64, x in -50.0..50.0_f64, dx in 1e-6..5.0_f64) {
        let g = QGaussian::new(q, beta).unwrap();
        let (a, b) = (g.cdf(x).unwrap(), g.cdf(x + dx).unwrap());
        prop_assert!(b >= a && (0.0..=1.0).contains(&a));
        prop_assert!((g.cdf(-x).unwrap() + a - 1.0).abs() < 1e-12);
        prop_assert!((g.exceedance(x.abs()).unwrap() - 2.0 * (1.0 - g.cdf(x.abs()).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn half_width_inverts_exceedance(q in 1.0..2.9_f64, beta in 1e-3..1e3_f64, level in 1e-4..0.999_f64) {
        let g = QGaussian::new(q, beta).unwrap();
        let w = g.half_width(level).unwrap();
        prop_assert!((g.exceedance(w).unwrap() - level).abs() < 1e-9 * level.max(1e-3));
    }

    #[test]
    fn q_logarithm_inverts_q_exponential(q in 0.5..2.9_f64, y in -3.0..3.0_f64) {
        let x = y.exp();
        let back = q_exponential(q_logarithm(x, q).unwrap(), q).unwrap();
        prop_assert!((back - x).abs() < 1e-10 * x);
    }

    #[test]
    fn moment_system_inverts_closed_forms(q in 1.0..1.6_f64, beta in 1e-4..1e4_f64) {
        let (m2, m2q) = (variance_from_beta(q, beta).unwrap(), q_variance_from_beta(q, beta).unwrap());
        let (q_hat, beta_hat) = solve_moment_system(m2, m2q).unwrap();
        prop_assert!((q_hat - q).abs() < 1e-9, "{q_hat} vs {q}");
        prop_assert!((beta_hat / beta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn moving_average_keeps_constants_and_lines(c in -1e3..1e3_f64, m in -5.0..5.0_f64, n in 10usize..200, w in 2usize..9) {
        let line: Vec<f64> = (0..n).map(|k| c + m * k as f64).collect();
        let avg = moving_average(&line, w).unwrap();
        for (a, v) in avg.iter().zip(&line) {
            prop_assert!((a - v).abs() < 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn decomposition_reconstructs_and_ignores_level_and_clock(
        values in prop::collection::vec(1.0..1e4_f64, 30..120),
        shift in 0.0..1e4_f64,
        offset in -1_000_000i64..1_000_000,
        window in 2usize..10,
    ) {
        let n = values.len();
        let ts: Vec<i64> = (0..n as i64).map(|k| 60 * k).collect();
        let a = detrend(&IndexSeries::new(ts.clone(), values.clone(), 60).unwrap(), 0, window).unwrap();
        prop_assert!(a.reconstruction_error() < 1e-12);
        let moved: Vec<i64> = ts.iter().map(|t| t + offset).collect();
        let raised: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let b = detrend(&IndexSeries::new(moved, raised, 60).unwrap(), offset, window).unwrap();
        for k in 0..n {
            prop_assert!((a.fluctuation[k] - b.fluctuation[k]).abs() < 1e-8 * (1.0 + shift));
            prop_assert!((a.returns[k] - b.returns[k]).abs() < 1e-8 * (1.0 + shift));
        }
    }

    #[test]
    fn zones_ignore_row_order(
        noise in prop::collection::vec(-0.02..0.02_f64, 60),
        perm_seed in any::<u64>(),
    ) {
        let t: Vec<f64> = (0..60).map(|k| 10f64.powf(k as f64 / 12.0)).collect();
        let b: Vec<f64> = t
            .iter()
            .zip(&noise)
            .map(|(&h, e)| {
                let slope = if h < 30.0 { -1.5 } else if h < 3000.0 { -1.0 } else { -0.6 };
                let ln_b = if h < 30.0 { slope * h.ln() } else if h < 3000.0 {
                    -1.5 * 30f64.ln() + slope * (h / 30.0).ln()
                } else {
                    -1.5 * 30f64.ln() - 1.0 * 100f64.ln() + slope * (h / 3000.0).ln()
                };
                (ln_b + e).exp()
            })
            .collect();
        let sorted = detect_zones(&t, &b, &ZoneConfig::default()).unwrap();
        let mut idx: Vec<usize> = (0..60).collect();
        let mut s = perm_seed;
        for i in (1..idx.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            idx.swap(i, (s >> 33) as usize % (i + 1));
        }
        let (ts, bs): (Vec<f64>, Vec<f64>) = idx.iter().map(|&i| (t[i], b[i])).unzip();
        let shuffled = detect_zones(&ts, &bs, &ZoneConfig::default()).unwrap();
        prop_assert_eq!(sorted.boundaries, shuffled.boundaries);
        prop_assert_eq!(sorted.slopes, shuffled.slopes);
    }

    #[test]
    fn parabola_meets_its_constraints(level in 1.0..1e5_f64, slope in -100.0..-1e-3_f64, recovery in 1.0..1e5_f64) {
        let p = TrendModel::parabola(0, level, slope, recovery).unwrap();
        prop_assert!((p.value(0.0) - level).abs() <= 1e-9 * level);
        prop_assert!((p.derivative(0.0) - slope).abs() <= 1e-9 * slope.abs());
        prop_assert!(p.derivative(recovery).abs() <= 1e-9 * slope.abs());
    }

    #[test]
    fn hyperbola_starts_on_the_collapse_and_reaches_the_recovery_slope(
        level in 100.0..1e4_f64,
        slope in -20.0..-0.1_f64,
        ratio in 0.1..1.0_f64,
        t_int in 10.0..500.0_f64,
        smooth_frac in 0.001..0.05_f64,
    ) {
        let h = TrendModel::hyperbola(0, level, slope, ratio, t_int, smooth_frac * level).unwrap();
        prop_assert!((h.value(0.0) - level).abs() <= 1e-9 * level);
        prop_assert!((h.derivative(0.0) - slope).abs() <= 1e-9 * slope.abs());
        let far = h.derivative(1e5 * t_int);
        prop_assert!((far - ratio * slope.abs()).abs() <= 1e-4 * slope.abs());
    }

    #[test]
    fn cone_bands_nest_grow_and_ignore_the_anchor_time(
        q in 1.0..2.5_f64,
        alpha in 0.8..2.0_f64,
        d in 0.1..10.0_f64,
        anchor in -1_000_000i64..1_000_000,
    ) {
        let c = curves(q, alpha, d);
        let opts = ConeOptions { horizon: 80, levels: vec![0.85, 0.15, 0.5], price_points: 41, grid_stride: 8, span_level: 0.01 };
        let a = forecast_cone(&TrendModel::parabola(0, 500.0, -1.0, 80.0).unwrap(), &c, &opts).unwrap();
        let b = forecast_cone(&TrendModel::parabola(anchor, 500.0, -1.0, 80.0).unwrap(), &c, &opts).unwrap();
        prop_assert_eq!(&a.half_widths, &b.half_widths);
        prop_assert_eq!(&a.probabilities, &b.probabilities);
        for t in 0..=80 {
            // levels are ordered 0.85, 0.15, 0.5: the 0.15 band is widest
            prop_assert!(a.half_widths[1][t] >= a.half_widths[2][t] && a.half_widths[2][t] >= a.half_widths[0][t]);
            if t > 0 {
                for w in &a.half_widths {
                    prop_assert!(w[t] >= w[t - 1]);
                }
            }
        }
    }
}
