//! Convex recovery programs and their CMSV error bounds.
//!
//! - [`solve_bp`]: `min ||z||_1  s.t.  ||y - A z||_2 <= eps`
//! - [`solve_ds`]: `min ||z||_1  s.t.  ||A'(y - A z)||_inf <= lambda`
//! - [`solve_lasso`]: `min 1/2 ||y - A z||_2^2 + lambda ||z||_1`
//!
//! Here `lambda` stands for the product `lambda_N sigma`.

mod bounds;
mod bp;
mod ds;
mod lasso;
mod support;

pub use bounds::{bound_theorem1, bound_theorem2, required_s, BoundReport, Caveat, NoiseModel, Regime};
pub use bp::solve_bp;
pub use ds::solve_ds;
pub use lasso::solve_lasso;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::{MeasurementMatrix, Signal};

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryResult {
    pub x_hat: Signal,
    pub iterations: usize,
    /// Per-iteration primal residuals (solver-specific; empty for the LP path).
    pub primal_residuals: Vec<f64>,
    pub converged: bool,
    /// Objective of the program at `x_hat`.
    pub objective: f64,
}

fn check_dims(a: &MeasurementMatrix, y: &Signal) -> Result<()> {
    if y.len() != a.nrows() {
        return Err(Error::invalid(format!(
            "measurement vector has length {}, matrix has {} rows",
            y.len(),
            a.nrows()
        )));
    }
    Ok(())
}

fn check_param(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
    }
    Ok(())
}
