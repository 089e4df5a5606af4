//! Levenberg-Marquardt for nonlinear least squares.
//!
//! Each trial step solves
//!
//! ```text
//! (J^T J + lambda diag(J^T J)) delta = -J^T r
//! ```
//!
//! through a QR factorization of the column-scaled augmented system
//! `[J D^-1/2; sqrt(lambda) I] delta' = [-r; 0]`, which avoids squaring the
//! condition number of `J`. Accepted steps shrink `lambda` by 0.3, rejected
//! ones double it. Iteration stops once `max |r_i|` reaches the tolerance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::jacobian::{fd_jacobian_with, FdOptions};
use crate::error::{Error, Result};

const DAMPING_DECREASE: f64 = 0.3;
const DAMPING_INCREASE: f64 = 2.0;
const DAMPING_MAX: f64 = 1e16;
/// Iterations without a 0.1% drop in `max |r|` before giving up.
const STALL_WINDOW: usize = 25;

pub trait LeastSquaresProblem: Sync {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Jacobian at `x`, where `r = residual(x)`.
    fn jacobian(&self, x: &[f64], r: &[f64], fd: &FdOptions) -> Result<DMatrix<f64>> {
        fd_jacobian_with(|y| self.residual(y), x, Some(r), fd)
    }
}

/// Adapts a residual closure; the Jacobian is taken by finite differences.
pub struct FnProblem<F>(pub F);

impl<F> LeastSquaresProblem for FnProblem<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        (self.0)(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    /// Stop when every residual component is at most this in magnitude.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub damping_init: f64,
    pub fd: FdOptions,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            tolerance: 5e-10,
            max_iterations: 200,
            damping_init: 1e-3,
            fd: FdOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// Damping grew unbounded or progress stalled.
    Stagnated,
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    /// Best point found (the last accepted iterate).
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    /// `max |r|` at the start and after every iteration.
    pub history: Vec<f64>,
    pub damping: f64,
}

impl LmOutcome {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn max_residual(&self) -> f64 {
        max_abs(&self.residual)
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Damped Gauss-Newton step for the given Jacobian, residual and damping.
pub fn damped_step(j: &DMatrix<f64>, r: &[f64], lambda: f64) -> Result<DVector<f64>> {
    let (m, n) = j.shape();
    let scale: Vec<f64> = (0..n)
        .map(|c| {
            let d = j.column(c).norm_squared();
            if d > 0.0 && d.is_finite() {
                d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let sqrt_lambda = lambda.sqrt();
    let aug = DMatrix::from_fn(m + n, n, |row, col| {
        if row < m {
            j[(row, col)] / scale[col]
        } else if row - m == col {
            sqrt_lambda
        } else {
            0.0
        }
    });
    let rhs = DVector::from_fn(m + n, |row, _| if row < m { -r[row] } else { 0.0 });
    let qr = aug.qr();
    let qtb = qr.q().tr_mul(&rhs);
    let upper = qr.r();
    if upper.diagonal().iter().any(|d| *d == 0.0 || !d.is_finite()) {
        return Err(Error::SingularNormalEquations);
    }
    let scaled = upper
        .solve_upper_triangular(&qtb)
        .ok_or(Error::SingularNormalEquations)?;
    let step = DVector::from_fn(n, |c, _| scaled[c] / scale[c]);
    if step.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularNormalEquations);
    }
    Ok(step)
}

/// Minimizes `0.5 |r(x)|^2` from `x0`.
///
/// Failure to reach the tolerance is reported through
/// [`LmOutcome::termination`], not as an error.
pub fn nls_solve<P: LeastSquaresProblem>(problem: &P, x0: &[f64], cfg: &LmConfig) -> Result<LmOutcome> {
    let mut x = x0.to_vec();
    let mut r = problem.residual(&x)?;
    let mut evaluations = 1;
    let mut history = vec![max_abs(&r)];
    let mut lambda = cfg.damping_init;
    let mut iterations = 0;

    let outcome = |x, r, iterations, evaluations, termination, history, lambda| LmOutcome {
        x,
        residual: r,
        iterations,
        evaluations,
        termination,
        history,
        damping: lambda,
    };

    if max_abs(&r) <= cfg.tolerance {
        return Ok(outcome(x, r, 0, evaluations, Termination::Converged, history, lambda));
    }

    while iterations < cfg.max_iterations {
        iterations += 1;
        let jac = problem.jacobian(&x, &r, &cfg.fd)?;
        let c0 = cost(&r);
        loop {
            let step = damped_step(&jac, &r, lambda)?;
            let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if step.norm() <= 1e-15 * (1.0 + x_norm) {
                return Ok(outcome(x, r, iterations, evaluations, Termination::Stagnated, history, lambda));
            }
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            evaluations += 1;
            let accepted = match problem.residual(&trial) {
                Ok(rt) if cost(&rt) < c0 => Some(rt),
                _ => None,
            };
            match accepted {
                Some(rt) => {
                    x = trial;
                    r = rt;
                    lambda *= DAMPING_DECREASE;
                    break;
                }
                None => {
                    lambda *= DAMPING_INCREASE;
                    if lambda > DAMPING_MAX {
                        return Ok(outcome(x, r, iterations, evaluations, Termination::Stagnated, history, lambda));
                    }
                }
            }
        }
        let current = max_abs(&r);
        history.push(current);
        if current <= cfg.tolerance {
            return Ok(outcome(x, r, iterations, evaluations, Termination::Converged, history, lambda));
        }
        if history.len() > STALL_WINDOW {
            let past = history[history.len() - 1 - STALL_WINDOW];
            if current > past * (1.0 - 1e-3) {
                return Ok(outcome(x, r, iterations, evaluations, Termination::Stagnated, history, lambda));
            }
        }
    }
    Ok(outcome(x, r, iterations, evaluations, Termination::MaxIterations, history, lambda))
}
