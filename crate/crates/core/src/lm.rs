//! Levenberg–Marquardt for small dense nonlinear least-squares problems,
//! with Nielsen damping updates and Marquardt diagonal scaling.
//!
//! Minimizes `½‖r(x)‖²`. Jacobians default to forward differences.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait LeastSquaresProblem {
    fn residuals(&self, x: &DVector<f64>) -> Option<DVector<f64>>;

    fn jacobian(&self, x: &DVector<f64>, r: &DVector<f64>) -> Option<DMatrix<f64>> {
        forward_jacobian(|p| self.residuals(p), x, r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmSettings {
    /// Largest cosine between the residual and any Jacobian column.
    pub gradient_tol: f64,
    /// Relative step length.
    pub step_tol: f64,
    /// Relative cost reduction, actual and predicted.
    pub cost_tol: f64,
    pub max_iterations: usize,
    pub initial_damping: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        LmSettings {
            gradient_tol: 1e-10,
            step_tol: 1e-12,
            cost_tol: 1e-14,
            max_iterations: 200,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Gradient,
    Step,
    Cost,
    ZeroResidual,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmReport {
    pub x: DVector<f64>,
    /// `½‖r‖²` at `x`.
    pub cost: f64,
    pub initial_cost: f64,
    pub residual_count: usize,
    pub iterations: usize,
    pub termination: Termination,
}

/// Forward-difference Jacobian with step `√ε·max(|x_j|, 1)`.
pub fn forward_jacobian<F>(f: F, x: &DVector<f64>, r: &DVector<f64>) -> Option<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let eps = f64::EPSILON.sqrt();
    let mut jac = DMatrix::zeros(r.len(), x.len());
    let mut xp = x.clone();
    for j in 0..x.len() {
        let h = eps * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let rp = f(&xp)?;
        xp[j] = x[j];
        jac.set_column(j, &((rp - r) / h));
    }
    Some(jac)
}

/// Central-difference Jacobian with step `rel_step·max(|x_j|, 1)`.
pub fn central_jacobian<F>(f: F, x: &DVector<f64>, rel_step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let r0 = f(x)?;
    let mut jac = DMatrix::zeros(r0.len(), x.len());
    let mut xp = x.clone();
    for j in 0..x.len() {
        let h = rel_step * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let rp = f(&xp)?;
        xp[j] = x[j] - h;
        let rm = f(&xp)?;
        xp[j] = x[j];
        jac.set_column(j, &((rp - rm) / (2.0 * h)));
    }
    Some(jac)
}

pub fn minimize<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    x0: DVector<f64>,
    settings: &LmSettings,
) -> Result<LmReport> {
    let mut x = x0;
    let mut r = problem
        .residuals(&x)
        .filter(|r| r.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::InvalidInput("residuals not finite at the initial guess".into()))?;
    let m = r.len();
    let n = x.len();
    let mut cost = 0.5 * r.norm_squared();
    let initial_cost = cost;
    let mut lambda = settings.initial_damping;
    let mut nu = 2.0;
    let mut jac = problem
        .jacobian(&x, &r)
        .ok_or_else(|| Error::InvalidInput("jacobian not available at the initial guess".into()))?;

    for iter in 1..=settings.max_iterations {
        if cost == 0.0 {
            return Ok(report(x, cost, initial_cost, m, iter - 1, Termination::ZeroResidual));
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let rnorm = r.norm();
        let max_cos = (0..n)
            .map(|j| {
                let cn = jac.column(j).norm();
                if cn == 0.0 {
                    0.0
                } else {
                    g[j].abs() / (cn * rnorm)
                }
            })
            .fold(0.0, f64::max);
        if max_cos <= settings.gradient_tol {
            return Ok(report(x, cost, initial_cost, m, iter - 1, Termination::Gradient));
        }
        let diag: DVector<f64> = jtj.diagonal().map(|d| d.max(1e-12 * jtj.diagonal().max().max(1e-300)));

        // Inner loop: grow damping until a step reduces the cost.
        loop {
            let mut a = jtj.clone();
            for j in 0..n {
                a[(j, j)] += lambda * diag[j];
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => match a.lu().solve(&(-&g)) {
                    Some(s) => s,
                    None => {
                        lambda *= nu;
                        nu *= 2.0;
                        if !lambda.is_finite() || lambda > 1e30 {
                            return Err(non_convergence(iter, cost, &x));
                        }
                        continue;
                    }
                },
            };
            let x_new = &x + &step;
            let predicted = 0.5 * step.dot(&(lambda * step.component_mul(&diag) - &g));
            let trial = problem.residuals(&x_new).filter(|r| r.iter().all(|v| v.is_finite()));
            let (rho, new_cost, r_new) = match trial {
                Some(rn) => {
                    let c = 0.5 * rn.norm_squared();
                    ((cost - c) / predicted.max(1e-300), c, Some(rn))
                }
                None => (-1.0, f64::INFINITY, None),
            };
            let small_step = step.norm() <= settings.step_tol * (x.norm() + settings.step_tol);
            if rho > 0.0 {
                let rel_actual = (cost - new_cost) / cost;
                let rel_pred = predicted / cost;
                x = x_new;
                r = r_new.expect("accepted step has residuals");
                cost = new_cost;
                lambda *= (1.0_f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                if small_step {
                    return Ok(report(x, cost, initial_cost, m, iter, Termination::Step));
                }
                if rel_actual.abs() <= settings.cost_tol && rel_pred <= settings.cost_tol {
                    return Ok(report(x, cost, initial_cost, m, iter, Termination::Cost));
                }
                jac = problem
                    .jacobian(&x, &r)
                    .ok_or_else(|| Error::InvalidInput("jacobian not available".into()))?;
                break;
            }
            if small_step {
                return Ok(report(x, cost, initial_cost, m, iter, Termination::Step));
            }
            lambda *= nu;
            nu *= 2.0;
            if !lambda.is_finite() || lambda > 1e30 {
                // Damping exhausted without progress: the current point is a
                // stationary point to working precision.
                return Ok(report(x, cost, initial_cost, m, iter, Termination::Step));
            }
        }
    }
    Err(non_convergence(settings.max_iterations, cost, &x))
}

fn report(x: DVector<f64>, cost: f64, initial_cost: f64, m: usize, iterations: usize, t: Termination) -> LmReport {
    LmReport { x, cost, initial_cost, residual_count: m, iterations, termination: t }
}

fn non_convergence(iterations: usize, cost: f64, x: &DVector<f64>) -> Error {
    Error::NonConvergence { iterations, best_cost: cost, best: x.iter().copied().collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Rosenbrock;

    impl LeastSquaresProblem for Rosenbrock {
        fn residuals(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
            Some(DVector::from_vec(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]))
        }
    }

    struct ExpFit {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquaresProblem for ExpFit {
        fn residuals(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
            Some(DVector::from_iterator(
                self.t.len(),
                self.t.iter().zip(&self.y).map(|(t, y)| x[0] * (-x[1] * t).exp() + x[2] - y),
            ))
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let rep = minimize(&Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &LmSettings::default()).unwrap();
        assert_relative_eq!(rep.x[0], 1.0, epsilon = 1e-8);
        assert_relative_eq!(rep.x[1], 1.0, epsilon = 1e-8);
        assert!(rep.cost <= rep.initial_cost);
    }

    #[test]
    fn recovers_exponential_decay() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y = t.iter().map(|t| 2.5 * (-1.3 * t).exp() + 0.4).collect();
        let rep = minimize(&ExpFit { t, y }, DVector::from_vec(vec![1.0, 0.5, 0.0]), &LmSettings::default()).unwrap();
        assert_relative_eq!(rep.x[0], 2.5, max_relative = 1e-8);
        assert_relative_eq!(rep.x[1], 1.3, max_relative = 1e-8);
        assert_relative_eq!(rep.x[2], 0.4, max_relative = 1e-8);
    }

    #[test]
    fn reports_non_convergence_with_best_iterate() {
        let settings = LmSettings { max_iterations: 2, ..LmSettings::default() };
        match minimize(&Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &settings) {
            Err(Error::NonConvergence { iterations, best, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(best.len(), 2);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn forward_and_central_jacobians_agree() {
        let p = ExpFit { t: vec![0.0, 0.5, 1.0, 2.0], y: vec![0.0; 4] };
        let x = DVector::from_vec(vec![2.0, 0.7, 0.1]);
        let r = p.residuals(&x).unwrap();
        let fwd = p.jacobian(&x, &r).unwrap();
        let cen = central_jacobian(|x| p.residuals(x), &x, 1e-6).unwrap();
        for (a, b) in fwd.iter().zip(cen.iter()) {
            assert!((a - b).abs() <= 1e-4 * b.abs().max(1e-3), "{a} vs {b}");
        }
    }
}
