//! Sampled restricted isometry constants and the classical RIC error bound.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{purpose, stream};
use crate::signal::MeasurementMatrix;
use crate::Direction;

pub const DEFAULT_RIC_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicEstimate {
    pub delta: f64,
    pub k: usize,
    pub n_samples: usize,
    /// Always [`Direction::LowerBound`]: a sampled maximum never exceeds the
    /// maximum over all supports.
    pub direction: Direction,
    /// `2k > m`: every sampled submatrix is rank deficient, so `delta >= 1`.
    pub degenerate: bool,
}

/// Support of sample `index`: the first `len` entries of a Fisher-Yates
/// shuffle of `0..n`. Supports for smaller `len` are prefixes of larger ones.
fn sample_support(seed: u64, index: u64, n: usize, len: usize) -> Vec<usize> {
    let mut rng = stream(seed, purpose::RIC_SUPPORT, index);
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..len {
        let r = rng.random_range(j..n);
        perm.swap(j, r);
    }
    perm.truncate(len);
    perm
}

/// `max(sigma_max^2 - 1, 1 - sigma_min^2)` for the columns in `support`,
/// read off the eigenvalues of the Gram matrix. `sigma_min` counts as zero
/// when the submatrix has more columns than rows.
pub fn isometry_defect(a: &DMatrix<f64>, support: &[usize]) -> f64 {
    let sub = a.select_columns(support.iter());
    let gram = sub.tr_mul(&sub);
    let eig = gram.symmetric_eigenvalues();
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = if support.len() > a.nrows() {
        0.0
    } else {
        eig.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0)
    };
    (hi - 1.0).max(1.0 - lo).max(0.0)
}

/// Monte Carlo estimate of `delta_{2k}(A)` from `n_samples` uniformly drawn
/// supports of size `2k`. Sample `i` uses its own random stream, so the
/// estimate is non-decreasing in `n_samples` and in `k` for a fixed seed.
pub fn estimate_ric(a: &MeasurementMatrix, k: usize, n_samples: usize, seed: u64) -> Result<RicEstimate> {
    let (m, n) = (a.nrows(), a.ncols());
    if k == 0 || 2 * k > n {
        return Err(Error::invalid(format!("need 1 <= 2k <= N, got k = {k}, N = {n}")));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    let delta = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| isometry_defect(a.matrix(), &sample_support(seed, i, n, 2 * k)))
        .reduce(|| 0.0, f64::max);
    Ok(RicEstimate {
        delta,
        k,
        n_samples,
        direction: Direction::LowerBound,
        degenerate: 2 * k > m,
    })
}

/// `C k^{1/q - 1/2} eps` with `C = 4 sqrt(1 + delta) / (1 - (1 + sqrt 2) delta)`,
/// valid for `1 <= q <= 2` and `delta < sqrt 2 - 1`.
pub fn ric_bound(delta: f64, k: usize, q: f64, eps: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&q) {
        return Err(Error::invalid(format!("RIC bound needs 1 <= q <= 2, got {q}")));
    }
    if k == 0 || !(delta >= 0.0) || !(eps >= 0.0) {
        return Err(Error::invalid("RIC bound needs k >= 1, delta >= 0, eps >= 0"));
    }
    let threshold = std::f64::consts::SQRT_2 - 1.0;
    if delta >= threshold {
        return Err(Error::NotApplicable(format!(
            "delta = {delta} is not below sqrt(2) - 1"
        )));
    }
    let c = 4.0 * (1.0 + delta).sqrt() / (1.0 - (1.0 + std::f64::consts::SQRT_2) * delta);
    Ok(c * (k as f64).powf(1.0 / q - 0.5) * eps)
}
