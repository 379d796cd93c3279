//! q-ratio sparsity levels, q-ratio constrained minimal singular values (CMSV)
//! and the recovery guarantees built on them.
//!
//! The crate is organised bottom-up:
//!
//! - [`signal`]: vectors, matrices, the q-ratio sparsity measure and CSV I/O.
//! - [`kernels`]: projections, proximal maps, a dense simplex LP solver and
//!   singular-value helpers shared by every algorithm below.
//! - [`cmsv`]: multi-start estimation of `rho_{q,s}(A)` plus a sampling oracle.
//! - [`nsp`]: certification of the maximal uniquely recoverable sparsity level
//!   (exact `L_inf` linear programs and the convex-concave procedure).
//! - [`recovery`]: Basis Pursuit, Dantzig selector, Lasso and their error bounds.
//! - [`ric`]: Monte Carlo restricted isometry constants and the RIC-based bound.
//! - [`ensembles`]: reproducible Gaussian, Bernoulli and partial Hadamard matrices.

pub mod cmsv;
pub mod ensembles;
pub mod error;
pub mod kernels;
pub mod nsp;
pub mod recovery;
pub mod rng;
pub mod ric;
pub mod signal;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Which side of the true quantity a numerical estimate falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    /// A local minimisation result: at least the true minimum.
    UpperBound,
    /// A sampled maximum: at most the true maximum.
    LowerBound,
    Exact,
}
pub use signal::{MeasurementMatrix, QParam, Signal};
