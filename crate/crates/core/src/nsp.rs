//! Certified sparsity levels for exact recovery by l1 minimisation.
//!
//! Every `k`-sparse vector is the unique Basis Pursuit solution as soon as
//! `k < (2 * max_q)^{-q/(q-1)}`, where `max_q` is the largest `l_q` norm over
//! `{z : A z = 0, ||z||_1 <= 1}`. For `q = ∞` this maximum is the best of `N`
//! linear programs and is computed exactly; for finite `q` it is a convex
//! maximisation, attacked with the convex-concave procedure (CCP), which only
//! finds a feasible point and hence a lower estimate of `max_q`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelBasis, KernelPolytope, LpStatus, SolverConfig};
use crate::rng::{purpose, stream};
use crate::signal::{lq_norm, MeasurementMatrix, QParam, Signal};

/// Objectives handled by one warm-started simplex in [`verify_linf`].
const LINF_CHUNK: usize = 16;
const CCP_MAX_ITER: usize = 200;
const CCP_TOL: f64 = 1e-8;
/// Random kernel starts tried by [`ccp_verify`] besides the given one.
pub const CCP_EXTRA_STARTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Certificate {
    /// Up to LP tolerance, `k_max` is the largest level the sufficient
    /// condition certifies.
    Exact,
    /// `opt_value` is attained by a feasible point but may fall short of the
    /// true maximum, so `k_max` may be too large.
    HeuristicUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Linf,
    Ccp,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationResult {
    pub q: QParam,
    pub opt_value: f64,
    /// `(2 * opt_value)^{-q/(q-1)}`, the bound `k` must stay strictly below.
    pub bound: f64,
    pub k_max: usize,
    pub certificate: Certificate,
    #[serde(skip)]
    pub witness: Signal,
    /// Objective values along the accepted CCP run; empty for `L_inf`.
    pub trace: Vec<f64>,
}

/// Largest integer strictly below `b`, treating values within `1e-9` of an
/// integer as that integer.
pub fn strict_floor(b: f64) -> usize {
    if !(b > 0.0) {
        return 0;
    }
    let r = b.round();
    let k = if (b - r).abs() <= 1e-9 { r - 1.0 } else { b.floor() };
    if k >= usize::MAX as f64 {
        usize::MAX
    } else {
        k.max(0.0) as usize
    }
}

/// `(2 * opt)^{-q/(q-1)}`, with exponent `1` for `q = ∞`.
pub fn sparsity_bound(q: QParam, opt: f64) -> f64 {
    (2.0 * opt).powf(-q.sparsity_exponent())
}

fn trivial_kernel(a: &MeasurementMatrix, q: QParam) -> VerificationResult {
    VerificationResult {
        q,
        opt_value: 0.0,
        bound: f64::INFINITY,
        k_max: a.ncols(),
        certificate: Certificate::Exact,
        witness: Signal::zeros(a.ncols()),
        trace: Vec::new(),
    }
}

fn finish(a: &MeasurementMatrix, q: QParam, opt: f64, witness: Signal, trace: Vec<f64>, cert: Certificate) -> VerificationResult {
    let bound = sparsity_bound(q, opt);
    VerificationResult {
        q,
        opt_value: opt,
        bound,
        k_max: strict_floor(bound).min(a.ncols()),
        certificate: cert,
        witness,
        trace,
    }
}

/// Exact certificate for `q = ∞`: maximises each coordinate over the kernel
/// polytope. The set is symmetric, so `max z_i` equals `max |z_i|`.
pub fn verify_linf(a: &MeasurementMatrix, cfg: &SolverConfig) -> Result<VerificationResult> {
    cfg.validate()?;
    let n = a.ncols();
    if KernelBasis::new(a.matrix()).dim() == 0 {
        return Ok(trivial_kernel(a, QParam::Infinity));
    }
    let base = KernelPolytope::new(a.matrix(), cfg)?;
    let chunks: Vec<Vec<usize>> = (0..n)
        .collect::<Vec<_>>()
        .chunks(LINF_CHUNK)
        .map(<[usize]>::to_vec)
        .collect();
    let per_chunk: Vec<Result<Vec<(f64, DVector<f64>)>>> = chunks
        .par_iter()
        .map(|idx| {
            let mut poly = base.clone();
            idx.iter()
                .map(|&i| {
                    let mut c = DVector::zeros(n);
                    c[i] = 1.0;
                    let sol = poly.maximize(&c)?;
                    if sol.status != LpStatus::Optimal {
                        return Err(Error::NotConverged {
                            context: Some(format!("L_inf linear program for coordinate {i}")),
                        });
                    }
                    Ok((sol.value, sol.z.into_vector()))
                })
                .collect()
        })
        .collect();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for chunk in per_chunk {
        for (v, z) in chunk? {
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, z));
            }
        }
    }
    let (opt, z) = best.expect("at least one column");
    Ok(finish(a, QParam::Infinity, opt.max(0.0), Signal::from_vector(z)?, Vec::new(), Certificate::Exact))
}

/// Direction of the gradient of `||z||_q`: `sign(z_i) |z_i|^{q-1}`, scaled by
/// `max |z_i|` to avoid overflow. Positive scaling does not change the LP.
fn ccp_direction(z: &DVector<f64>, q: f64) -> DVector<f64> {
    let zmax = z.amax();
    z.map(|v| {
        if v == 0.0 {
            0.0
        } else {
            v.signum() * (v.abs() / zmax).powf(q - 1.0)
        }
    })
}

fn ccp_run(poly: &mut KernelPolytope, q: QParam, start: DVector<f64>) -> Result<(f64, DVector<f64>, Vec<f64>)> {
    let qv = q.value();
    let mut z = start;
    let mut f = lq_norm(z.as_slice(), q);
    let mut trace = vec![f];
    for _ in 0..CCP_MAX_ITER {
        let sol = poly.maximize(&ccp_direction(&z, qv))?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::NotConverged {
                context: Some("CCP linear subproblem".into()),
            });
        }
        let w = sol.z.into_vector();
        let fw = lq_norm(w.as_slice(), q);
        if fw < f {
            // only LP rounding can lower the objective; keep the better point
            break;
        }
        let delta = fw - f;
        z = w;
        f = fw;
        trace.push(f);
        if delta < CCP_TOL {
            break;
        }
    }
    Ok((f, z, trace))
}

/// Heuristic certificate for finite `q > 1` via the convex-concave procedure.
///
/// Runs CCP from `init` (the `L_inf` witness when `None`) and from
/// [`CCP_EXTRA_STARTS`] random kernel vectors drawn from `cfg.seed`, keeping
/// the largest final objective.
pub fn ccp_verify(a: &MeasurementMatrix, q: QParam, init: Option<&Signal>, cfg: &SolverConfig) -> Result<VerificationResult> {
    cfg.validate()?;
    let q = q.require_super_linear()?;
    if q == QParam::Infinity {
        return verify_linf(a, cfg);
    }
    let n = a.ncols();
    let kernel = KernelBasis::new(a.matrix());
    if kernel.dim() == 0 {
        return Ok(trivial_kernel(a, q));
    }
    if let Some(z) = init {
        if z.len() != n {
            return Err(Error::invalid("CCP start has the wrong length"));
        }
    }
    let first = match init {
        Some(z) => z.vector().clone(),
        None => verify_linf(a, cfg)?.witness.into_vector(),
    };

    let to_ball = |z: DVector<f64>| -> DVector<f64> {
        let l1 = z.lp_norm(1);
        if l1 > 0.0 {
            z / l1
        } else {
            z
        }
    };
    let mut starts = Vec::with_capacity(1 + CCP_EXTRA_STARTS);
    let first = if first.amax() == 0.0 {
        kernel.random_vector(&mut stream(cfg.seed, purpose::CCP_START, u64::MAX >> 16))?
    } else {
        first
    };
    starts.push(to_ball(first));
    for i in 0..CCP_EXTRA_STARTS {
        let mut rng = stream(cfg.seed, purpose::CCP_START, i as u64);
        starts.push(to_ball(kernel.random_vector(&mut rng)?));
    }

    let base = KernelPolytope::new(a.matrix(), cfg)?;
    let runs: Vec<Result<(f64, DVector<f64>, Vec<f64>)>> = starts
        .into_par_iter()
        .map(|s| ccp_run(&mut base.clone(), q, s))
        .collect();
    let mut best: Option<(f64, DVector<f64>, Vec<f64>)> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.0 > b.0) {
            best = Some(run);
        }
    }
    let (opt, z, trace) = best.expect("at least one start");
    Ok(finish(a, q, opt, Signal::from_vector(z)?, trace, Certificate::HeuristicUpper))
}

/// `k_max` by the chosen method; `Linf` ignores `q`.
pub fn max_recoverable_sparsity(a: &MeasurementMatrix, q: QParam, method: Method, cfg: &SolverConfig) -> Result<usize> {
    Ok(match method {
        Method::Linf => verify_linf(a, cfg)?.k_max,
        Method::Ccp => ccp_verify(a, q, None, cfg)?.k_max,
    })
}
