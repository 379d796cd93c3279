//! The q-ratio constrained minimal singular value
//!
//! `rho_{q,s}(A) = min { ||A z||_2 / ||z||_q : z != 0, s_q(z) <= s }`.
//!
//! Scaling `z` onto the `l_q` sphere turns the sparsity constraint into
//! `||z||_1 <= s^{(q-1)/q}`, so the problem is a nonconvex minimisation of a
//! quadratic over `{||z||_1 <= R, ||z||_q = 1}`. [`estimate_cmsv`] runs a
//! local method from several starts; the best local value can only be at or
//! above the true minimum. [`brute_force_cmsv`] is a sampling oracle for very
//! small `N`.

mod local;
mod oracle;

pub use oracle::{brute_force_cmsv, check_proposition2, Prop2Report, SamplePool};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{soft_threshold, SolverConfig};
use crate::rng::{purpose, stream};
use crate::signal::{lq_norm, MeasurementMatrix, QParam, Signal};
use crate::Direction;
use local::LocalProblem;

pub const DEFAULT_RESTARTS: usize = 30;
/// Iteration cap of a single local run.
pub const LOCAL_MAX_ITER: usize = 5000;
/// Projected-gradient residual at which a local run counts as stationary.
pub const STATIONARITY_TOL: f64 = 1e-6;
const BISECTIONS: usize = 100;
/// Perturb-and-descend rounds after each local run; a round is kept only if
/// it lowers the value. Minimisers near sparse vectors come in families of
/// nearby basins that plain restarts cover poorly.
const KICKS: usize = 3;
const KICK_SIZE: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct CmsvRequest<'a> {
    pub a: &'a MeasurementMatrix,
    pub q: QParam,
    pub s: f64,
    pub restarts: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct CmsvEstimate {
    pub value: f64,
    #[serde(skip)]
    pub minimizer: Signal,
    pub trial_values: Vec<f64>,
    /// Always [`Direction::UpperBound`].
    pub direction: Direction,
    pub q: QParam,
    pub s: f64,
    /// Trials whose final iterate met the stationarity tolerance.
    pub converged_trials: usize,
    /// Projected-gradient residual of the best trial's final iterate.
    pub residual: f64,
}

impl<'a> CmsvRequest<'a> {
    pub fn new(a: &'a MeasurementMatrix, q: QParam, s: f64) -> Self {
        CmsvRequest {
            a,
            q,
            s,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }

    pub fn restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_qs(self.a, self.q, self.s)?;
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        self.solver.validate()
    }
}

pub(crate) fn validate_qs(a: &MeasurementMatrix, q: QParam, s: f64) -> Result<()> {
    q.require_super_linear()?;
    let n = a.ncols();
    if !(s >= 1.0 && s <= n as f64) {
        return Err(Error::InvalidS { s, n });
    }
    Ok(())
}

/// `R = s^{(q-1)/q}`, the `l_1` radius matching `s_q(z) <= s` on the sphere.
pub fn l1_radius(q: QParam, s: f64) -> f64 {
    s.powf(q.radius_exponent())
}

/// Maps a nonzero vector onto the `l_q` sphere inside the `l_1` ball of
/// radius `radius`: the rescaled soft-thresholded vector, with the smallest
/// threshold (found by bisection) that makes it feasible. Soft thresholding
/// keeps signs and the ordering of magnitudes, and the largest entries alone
/// always fit because `radius >= 1`. `None` only for the zero vector or ties
/// at the largest magnitude that do not fit.
fn pull_into_ball(x: &DVector<f64>, q: QParam, radius: f64) -> Option<DVector<f64>> {
    let limit = radius * (1.0 + 1e-9);
    let scaled = |tau: f64| {
        let w = DVector::from_vec(soft_threshold(x.as_slice(), tau));
        let norm = lq_norm(w.as_slice(), q);
        (norm > 0.0).then(|| w / norm)
    };
    let fits = |z: &DVector<f64>| z.lp_norm(1) <= limit;
    let z = scaled(0.0)?;
    if fits(&z) {
        return Some(z);
    }
    // any threshold at or above the runner-up magnitude leaves only the top entries
    let top = x.amax();
    let mut hi = x.iter().map(|v| v.abs()).filter(|&v| v < top).fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut best = scaled(hi).filter(|z| fits(z))?;
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match scaled(mid).filter(|z| fits(z)) {
            Some(z) => {
                hi = mid;
                best = z;
            }
            None => lo = mid,
        }
    }
    Some(best)
}

/// Random feasible start for trial `trial`: a Gaussian direction pulled
/// into the feasible set, or a random signed basis vector if that fails.
/// Even trials restrict the start to a random support of size `floor(s) + 1`,
/// the smallest support that reaches the `l_1` boundary; every other one of
/// those takes the direction `A_S` shrinks most (a kernel vector of `A_S`
/// when the support has more columns than `A` has rows).
fn random_start(a: &DMatrix<f64>, q: QParam, s: f64, radius: f64, rng: &mut impl Rng, trial: u64) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    if trial % 2 == 0 {
        let k = (s.floor() as usize + 1).min(n);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        for &j in &idx[k..] {
            x[j] = 0.0;
        }
        if trial % 4 == 2 {
            let support = &idx[..k];
            let sub = a.select_columns(support.iter());
            let eig = sub.tr_mul(&sub).symmetric_eigen();
            let lo = eig.eigenvalues.imin();
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            for (c, &j) in support.iter().enumerate() {
                x[j] = sign * eig.eigenvectors[(c, lo)];
            }
        }
    }
    if let Some(z) = pull_into_ball(&x, q, radius) {
        return z;
    }
    let mut e = DVector::zeros(n);
    e[rng.random_range(0..n)] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    e
}

/// Multi-start estimate of `rho_{q,s}(A)`.
///
/// Trial 0 starts at the basis vector of the shortest column (so the result
/// never exceeds the smallest column norm); the others start from
/// [`random_start`] with streams keyed by `(seed, trial)`. Each trial is
/// followed by [`KICKS`] perturbation rounds. Trials run in
/// parallel and the minimum is taken, ties going to the lowest trial index.
pub fn estimate_cmsv(req: &CmsvRequest) -> Result<CmsvEstimate> {
    req.validate()?;
    let a = req.a.matrix();
    let n = a.ncols();
    let radius = l1_radius(req.q, req.s);
    let problem = LocalProblem {
        a,
        q: req.q,
        radius,
        lipschitz: 2.0 * a.norm_squared(),
    };
    if problem.lipschitz == 0.0 {
        let mut e = DVector::zeros(n);
        e[0] = 1.0;
        return Ok(CmsvEstimate {
            value: 0.0,
            minimizer: Signal::from_vector(e)?,
            trial_values: vec![0.0; req.restarts],
            direction: Direction::UpperBound,
            q: req.q,
            s: req.s,
            converged_trials: req.restarts,
            residual: 0.0,
        });
    }
    let max_iter = req.solver.max_iter.min(LOCAL_MAX_ITER);

    let trials: Vec<local::LocalResult> = (0..req.restarts as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(req.seed, purpose::CMSV_START, t);
            let start = if t == 0 {
                let norms = req.a.column_norms();
                let j = (0..n).fold(0, |b, j| if norms[j] < norms[b] { j } else { b });
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                e
            } else {
                random_start(a, req.q, req.s, radius, &mut rng, t)
            };
            let mut best = problem.minimize(start, max_iter, STATIONARITY_TOL);
            for _ in 0..KICKS {
                let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let kicked = &best.z + noise * (KICK_SIZE / (n as f64).sqrt());
                let Some(start) = pull_into_ball(&kicked, req.q, radius) else {
                    continue;
                };
                let r = problem.minimize(start, max_iter, STATIONARITY_TOL);
                if r.value < best.value {
                    best = r;
                }
            }
            best
        })
        .collect();

    let trial_values: Vec<f64> = trials.iter().map(|t| t.value).collect();
    let converged_trials = trials.iter().filter(|t| t.converged).count();
    let best = (0..trials.len())
        .fold(0, |b, i| if trial_values[i] < trial_values[b] { i } else { b });
    let best = trials.into_iter().nth(best).expect("restarts >= 1");
    Ok(CmsvEstimate {
        value: best.value,
        minimizer: Signal::from_vector(best.z)?,
        trial_values,
        direction: Direction::UpperBound,
        q: req.q,
        s: req.s,
        converged_trials,
        residual: best.residual,
    })
}
