//! Optimization building blocks shared by the estimators and solvers.

mod lp;
mod nullspace;
mod projection;
pub mod simplex;
mod svd;

pub use lp::{solve_lp, KernelPolytope, LpProblem, LpSolution};
pub use nullspace::{project_nullspace, KernelBasis};
pub use projection::{project_l1_ball, project_l1_ball_into, soft_threshold};
pub use simplex::{LpStatus, Simplex, StandardLp};
pub use svd::{extreme_singular_values, spectral_norm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iteration budget and tolerances for the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    /// Step size or penalty parameter; its meaning depends on the solver
    /// (ADMM penalty for Basis Pursuit, initial step scale elsewhere).
    pub step: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 50_000,
            tol_primal: 1e-8,
            tol_dual: 1e-7,
            step: 1.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid("step parameter must be positive"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
