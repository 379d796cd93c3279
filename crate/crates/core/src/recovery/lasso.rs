//! Lasso by accelerated proximal gradient with step `1/L`, `L = sigma_max(A)^2`.
//!
//! Monotone variant: a step that would raise the objective is rejected and
//! the momentum restarted from the last accepted point. Every
//! [`POLISH_EVERY`] iterations the stationary point on the current support
//! is tried, and taken if it satisfies the full optimality conditions.

use nalgebra::{DMatrix, DVector};

use super::support::{support_of, Restricted};
use super::{check_dims, check_param, RecoveryResult};
use crate::error::Result;
use crate::kernels::{soft_threshold, spectral_norm, SolverConfig};
use crate::signal::{MeasurementMatrix, Signal};

const POLISH_EVERY: usize = 50;
const SUPPORT_REL: f64 = 1e-9;

fn objective(a: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, x: &DVector<f64>) -> f64 {
    0.5 * (y - a * x).norm_squared() + lambda * x.lp_norm(1)
}

/// Subgradient optimality: `|A'(y - Ax)|_i <= lambda` everywhere, with
/// equality and matching sign on the support.
pub(crate) fn kkt_violation(a: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, x: &DVector<f64>) -> f64 {
    let corr = a.tr_mul(&(y - a * x));
    (0..x.len())
        .map(|i| {
            if x[i] == 0.0 {
                (corr[i].abs() - lambda).max(0.0)
            } else {
                (corr[i] - lambda * x[i].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Lasso with penalty `lambda = lambda_N sigma`.
pub fn solve_lasso(a: &MeasurementMatrix, y: &Signal, lambda: f64, cfg: &SolverConfig) -> Result<RecoveryResult> {
    check_dims(a, y)?;
    check_param("lambda", lambda)?;
    cfg.validate()?;
    let m = a.matrix();
    let yv = y.vector();
    let n = m.ncols();
    let lip = spectral_norm(m).powi(2);
    let scale = 1.0 + m.tr_mul(yv).amax();
    let f = |x: &DVector<f64>| objective(m, yv, lambda, x);
    let finish = |x: DVector<f64>, iterations, trace, converged| -> Result<RecoveryResult> {
        let objective = f(&x);
        Ok(RecoveryResult {
            x_hat: Signal::from_vector(x)?,
            iterations,
            primal_residuals: trace,
            converged,
            objective,
        })
    };
    if lip == 0.0 {
        return finish(DVector::zeros(n), 0, Vec::new(), true);
    }

    let mut x = DVector::zeros(n);
    let mut fx = f(&x);
    let mut w = x.clone();
    let mut t = 1.0f64;
    let mut trace = Vec::new();
    for it in 1..=cfg.max_iter {
        let grad = m.tr_mul(&(m * &w - yv));
        let z = DVector::from_vec(soft_threshold((&w - &grad / lip).as_slice(), lambda / lip));
        let mapping = (&w - &z).amax() * lip;
        trace.push(mapping);
        let fz = f(&z);
        if fz <= fx {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            w = &z + (&z - &x) * ((t - 1.0) / t_next);
            x = z;
            fx = fz;
            t = t_next;
        } else {
            w = x.clone();
            t = 1.0;
        }
        if mapping <= cfg.tol_primal * scale {
            return finish(x, it, trace, true);
        }
        if it % POLISH_EVERY == 0 {
            if let Some(c) = Restricted::new(m, &x, support_of(&x, SUPPORT_REL)).and_then(|r| r.lasso(yv, lambda, n)) {
                if kkt_violation(m, yv, lambda, &c) <= cfg.tol_primal * scale && f(&c) <= fx * (1.0 + 1e-12) {
                    return finish(c, it, trace, true);
                }
            }
        }
    }
    finish(x, cfg.max_iter, trace, false)
}
