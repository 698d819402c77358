//! Small dense Levenberg-Marquardt solver with box constraints enforced by
//! projection.

use nalgebra::{DMatrix, DVector};

pub trait LeastSquares {
    fn n_params(&self) -> usize;
    fn residuals(&self, params: &[f64]) -> Vec<f64>;
    /// Row-major Jacobian, one row per residual.
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub struct LmSettings {
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub max_iterations: usize,
    pub rel_cost_tol: f64,
    pub step_tol: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LmSettings {
    pub fn with_bounds(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            lambda_init: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            max_iterations: 200,
            rel_cost_tol: 1e-9,
            step_tol: 1e-10,
            lower,
            upper,
        }
    }

    fn project(&self, p: &mut [f64]) {
        for ((x, lo), hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(*lo, *hi);
        }
    }

    fn on_bound(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .any(|((x, lo), hi)| x <= lo || x >= hi)
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub n_residuals: usize,
    pub iterations: usize,
    /// The stopping test was met in the interior of the box.
    pub converged: bool,
    pub pinned: bool,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    /// σ² (JᵀJ)⁻¹ at the solution, σ² = cost/(m − n). Infinite entries when
    /// JᵀJ is singular.
    pub covariance: DMatrix<f64>,
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

pub fn minimize<P: LeastSquares>(problem: &P, start: &[f64], settings: &LmSettings) -> LmOutcome {
    let n = problem.n_params();
    let mut params = start.to_vec();
    settings.project(&mut params);
    let mut residuals = problem.residuals(&params);
    let m = residuals.len();
    let mut cost = cost_of(&residuals);
    let mut history = vec![cost];
    let mut lambda = settings.lambda_init;
    let mut converged = cost == 0.0;
    let mut iterations = 0;

    while !converged && iterations < settings.max_iterations {
        iterations += 1;
        let jac = problem.jacobian(&params);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&residuals);
        let scale_floor = 1e-12 * jtj.diagonal().max().max(f64::MIN_POSITIVE);

        let mut damped = jtj.clone();
        for i in 0..n {
            damped[(i, i)] += lambda * jtj[(i, i)].max(scale_floor);
        }
        let Some(step) = damped.cholesky().map(|c| c.solve(&(-&grad))) else {
            lambda *= settings.lambda_up;
            continue;
        };

        let mut trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
        settings.project(&mut trial);
        let step_norm = trial
            .iter()
            .zip(&params)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let trial_res = problem.residuals(&trial);
        let trial_cost = cost_of(&trial_res);

        if trial_cost.is_finite() && trial_cost < cost {
            let rel = (cost - trial_cost) / cost;
            params = trial;
            residuals = trial_res;
            cost = trial_cost;
            history.push(cost);
            lambda /= settings.lambda_down;
            if rel < settings.rel_cost_tol || step_norm < settings.step_tol {
                converged = true;
            }
        } else {
            lambda *= settings.lambda_up;
            if step_norm < settings.step_tol {
                converged = true;
            }
        }
    }

    let jac = problem.jacobian(&params);
    let jtj = jac.transpose() * &jac;
    let dof = m.saturating_sub(n).max(1) as f64;
    let covariance = match jtj.clone().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => inv * (cost / dof),
        _ => DMatrix::from_element(n, n, f64::INFINITY),
    };
    let pinned = settings.on_bound(&params);

    LmOutcome {
        params,
        cost,
        n_residuals: m,
        iterations,
        converged: converged && !pinned,
        pinned,
        cost_history: history,
        covariance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// y = a·exp(−b t)
    struct Decay {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquares for Decay {
        fn n_params(&self) -> usize {
            2
        }

        fn residuals(&self, p: &[f64]) -> Vec<f64> {
            self.t.iter().zip(&self.y).map(|(t, y)| p[0] * (-p[1] * t).exp() - y).collect()
        }

        fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
            DMatrix::from_fn(self.t.len(), 2, |i, j| {
                let e = (-p[1] * self.t[i]).exp();
                if j == 0 {
                    e
                } else {
                    -p[0] * self.t[i] * e
                }
            })
        }
    }

    fn decay() -> Decay {
        let t: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y = t.iter().map(|t| 2.5 * (-1.3 * t).exp()).collect();
        Decay { t, y }
    }

    #[test]
    fn recovers_exact_parameters() {
        let out = minimize(&decay(), &[1.0, 0.5], &LmSettings::with_bounds(vec![0.0, 0.0], vec![10.0, 10.0]));
        assert!(out.converged);
        assert!((out.params[0] - 2.5).abs() < 1e-8);
        assert!((out.params[1] - 1.3).abs() < 1e-8);
        assert!(out.cost_history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn bound_pinned_solution_is_not_converged() {
        let out = minimize(&decay(), &[1.0, 0.5], &LmSettings::with_bounds(vec![0.0, 0.0], vec![2.0, 10.0]));
        assert!(out.pinned);
        assert!(!out.converged);
        assert_eq!(out.params[0], 2.0);
    }

    #[test]
    fn iteration_cap() {
        let mut s = LmSettings::with_bounds(vec![0.0, 0.0], vec![10.0, 10.0]);
        s.max_iterations = 2;
        let out = minimize(&decay(), &[0.1, 5.0], &s);
        assert_eq!(out.iterations, 2);
        assert!(!out.converged);
        assert!(out.cost <= out.cost_history[0]);
    }
}
