//! Derivative-free minimization (Nelder–Mead).

/// Outcome of a minimization.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_iterations: usize,
    /// Stop when the spread of simplex values falls below
    /// `f_tol * (|f_best| + f_tol)` and its diameter below `x_tol`.
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_iterations: 4000, f_tol: 1e-10, x_tol: 1e-9 }
    }
}

impl NelderMead {
    /// Minimizes `f` from `start` with initial simplex edge lengths `step`.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, start: &[f64], step: &[f64]) -> Minimum {
        let n = start.len();
        let mut eval = |x: &[f64], count: &mut usize| {
            *count += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut evaluations = 0;
        let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
        for i in 0..n {
            let mut p = start.to_vec();
            p[i] += step[i];
            simplex.push(p);
        }
        let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evaluations)).collect();

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iterations {
            // order: best first
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = values[n] - values[0];
            let diameter = simplex[1..]
                .iter()
                .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread <= self.f_tol * (values[0].abs() + self.f_tol) && diameter <= self.x_tol {
                converged = true;
                break;
            }
            iterations += 1;

            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |coef: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n]).map(|(c, w)| c + coef * (c - w)).collect()
            };
            let reflected = along(alpha);
            let fr = eval(&reflected, &mut evaluations);
            if fr < values[0] {
                let expanded = along(gamma);
                let fe = eval(&expanded, &mut evaluations);
                if fe < fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
                continue;
            }
            let (contracted, fc) = if fr < values[n] {
                let c = along(rho * alpha);
                let fc = eval(&c, &mut evaluations);
                (c, fc)
            } else {
                let c = along(-rho);
                let fc = eval(&c, &mut evaluations);
                (c, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
                continue;
            }
            // shrink towards the best vertex
            for i in 1..=n {
                let p: Vec<f64> = simplex[0].iter().zip(&simplex[i]).map(|(b, x)| b + sigma * (x - b)).collect();
                values[i] = eval(&p, &mut evaluations);
                simplex[i] = p;
            }
        }
        let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        Minimum { x: simplex[best].clone(), value: values[best], iterations, evaluations, converged }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = NelderMead::default().minimize(f, &[-1.2, 1.0], &[0.5, 0.5]);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn quadratic_bowl_3d() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 2.0).powi(2) + 3.0 * (x[2] - 0.5).powi(2) + 4.0;
        let m = NelderMead::default().minimize(f, &[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]);
        assert!((m.value - 4.0).abs() < 1e-12);
        assert!((m.x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn reports_non_convergence() {
        let nm = NelderMead { max_iterations: 3, ..Default::default() };
        let m = nm.minimize(|x| x[0] * x[0] + x[1] * x[1], &[5.0, 5.0], &[1.0, 1.0]);
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }
}
