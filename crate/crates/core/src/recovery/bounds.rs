//! CMSV error bounds for the three recovery programs.
//!
//! Every bound has the form `noise term / rho` or `noise term / rho^2`, plus a
//! sparsity-defect term `sigma_k(x)_1` in the compressible regime. The CMSV
//! must be evaluated at `s = c^{q/(q-1)} k`, where the cone constant `c` is 2
//! (exactly sparse) or 4 (compressible), divided by `1 - kappa` for the
//! Lasso.

use serde::{Deserialize, Serialize};

use crate::cmsv::CmsvEstimate;
use crate::error::{Error, Result};
use crate::signal::QParam;

/// Noise conditions. `lambda_sigma` is the product `lambda_N sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `||w||_2 <= eps`, for Basis Pursuit.
    L2Ball { eps: f64 },
    /// `||A'w||_inf <= lambda_sigma`, for the Dantzig selector.
    CorrelatedInf { lambda_sigma: f64 },
    /// `||A'w||_inf <= kappa lambda_sigma`, for the Lasso.
    LassoPen { lambda_sigma: f64, kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    ExactSparse,
    Compressible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Caveat {
    /// `rho` is a local-search value, at least the true CMSV, so the bound
    /// may be optimistic.
    RhoUpperBound,
    /// The required `s` exceeds `N`; `rho_{q,N}` was used, which is equal
    /// because `s_q(z) <= N` always.
    SClampedToN,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub q: QParam,
    pub k: usize,
    pub noise: NoiseModel,
    pub rho_used: CmsvEstimate,
    /// The `s` at which the theorem needs the CMSV.
    pub required_s: f64,
    pub bound_lq: f64,
    pub bound_l1: f64,
    /// Maximum instead of sum of the noise and defect terms.
    pub sharpened_lq: Option<f64>,
    pub sharpened_l1: Option<f64>,
    pub regime: Regime,
    pub sigma_k: Option<f64>,
    pub caveat_flags: Vec<Caveat>,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let (v, kappa) = match *self {
            NoiseModel::L2Ball { eps } => (eps, None),
            NoiseModel::CorrelatedInf { lambda_sigma } => (lambda_sigma, None),
            NoiseModel::LassoPen { lambda_sigma, kappa } => (lambda_sigma, Some(kappa)),
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("noise level must be finite and nonnegative, got {v}")));
        }
        if let Some(kappa) = kappa {
            if !(kappa > 0.0 && kappa < 1.0) {
                return Err(Error::invalid(format!("kappa must lie in (0, 1), got {kappa}")));
            }
        }
        Ok(())
    }

    fn cone_constant(&self, regime: Regime) -> f64 {
        let base = match regime {
            Regime::ExactSparse => 2.0,
            Regime::Compressible => 4.0,
        };
        match *self {
            NoiseModel::LassoPen { kappa, .. } => base / (1.0 - kappa),
            _ => base,
        }
    }
}

/// `k^{1 - 1/q}`, equal to `k` for `q = ∞`.
fn k_power(k: usize, q: QParam) -> f64 {
    (k as f64).powf(q.radius_exponent())
}

/// Sparsity level `c^{q/(q-1)} k` at which the CMSV enters the bound.
pub fn required_s(noise: &NoiseModel, regime: Regime, k: usize, q: QParam) -> f64 {
    noise.cone_constant(regime).powf(q.sparsity_exponent()) * k as f64
}

/// Noise terms `(lq, l1)`; the compressible regime doubles the DS and Lasso
/// constants.
fn noise_terms(noise: &NoiseModel, regime: Regime, k: usize, q: QParam, rho: f64) -> (f64, f64) {
    let kp = k_power(k, q);
    let twice = match regime {
        Regime::ExactSparse => 1.0,
        Regime::Compressible => 2.0,
    };
    match *noise {
        NoiseModel::L2Ball { eps } => (2.0 * eps / rho, 4.0 * kp * eps / rho),
        NoiseModel::CorrelatedInf { lambda_sigma } => {
            let r2 = rho * rho;
            (twice * 4.0 * kp * lambda_sigma / r2, twice * 8.0 * kp * kp * lambda_sigma / r2)
        }
        NoiseModel::LassoPen { lambda_sigma, kappa } => {
            let r2 = rho * rho;
            let c = (1.0 + kappa) / (1.0 - kappa);
            (
                twice * c * 2.0 * kp * lambda_sigma / r2,
                twice * c / (1.0 - kappa) * 4.0 * kp * kp * lambda_sigma / r2,
            )
        }
    }
}

fn check(rho: &CmsvEstimate, k: usize, q: QParam, noise: &NoiseModel, regime: Regime) -> Result<(f64, Vec<Caveat>)> {
    q.require_super_linear()?;
    noise.validate()?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if rho.q != q {
        return Err(Error::invalid(format!("CMSV was computed for q = {}, bound asks for q = {q}", rho.q)));
    }
    let required = required_s(noise, regime, k, q);
    let n = rho.minimizer.len() as f64;
    let mut caveats = vec![Caveat::RhoUpperBound];
    let expected = if required > n {
        caveats.push(Caveat::SClampedToN);
        n
    } else {
        required
    };
    if (rho.s - expected).abs() > 1e-9 * expected {
        return Err(Error::SMismatch { expected, found: rho.s });
    }
    if !(rho.value > 0.0) {
        return Err(Error::NotApplicable(format!("rho_(q,s) = {} is not positive", rho.value)));
    }
    Ok((required, caveats))
}

/// Error bounds for an exactly `k`-sparse signal.
pub fn bound_theorem1(rho: &CmsvEstimate, k: usize, q: QParam, noise: NoiseModel) -> Result<BoundReport> {
    let regime = Regime::ExactSparse;
    let (required_s, caveat_flags) = check(rho, k, q, &noise, regime)?;
    let (bound_lq, bound_l1) = noise_terms(&noise, regime, k, q, rho.value);
    Ok(BoundReport {
        q,
        k,
        noise,
        rho_used: rho.clone(),
        required_s,
        bound_lq,
        bound_l1,
        sharpened_lq: None,
        sharpened_l1: None,
        regime,
        sigma_k: None,
        caveat_flags,
    })
}

/// Error bounds for a compressible signal with best `k`-term error `sigma_k`.
pub fn bound_theorem2(rho: &CmsvEstimate, k: usize, q: QParam, noise: NoiseModel, sigma_k: f64) -> Result<BoundReport> {
    let regime = Regime::Compressible;
    let (required_s, caveat_flags) = check(rho, k, q, &noise, regime)?;
    if !(sigma_k >= 0.0 && sigma_k.is_finite()) {
        return Err(Error::invalid(format!("sigma_k must be finite and nonnegative, got {sigma_k}")));
    }
    let (noise_lq, noise_l1) = noise_terms(&noise, regime, k, q, rho.value);
    let defect_lq = sigma_k / k_power(k, q);
    let defect_l1 = match noise {
        NoiseModel::LassoPen { kappa, .. } => 4.0 / (1.0 - kappa),
        _ => 4.0,
    } * sigma_k;
    Ok(BoundReport {
        q,
        k,
        noise,
        rho_used: rho.clone(),
        required_s,
        bound_lq: noise_lq + defect_lq,
        bound_l1: noise_l1 + defect_l1,
        sharpened_lq: Some(noise_lq.max(defect_lq)),
        sharpened_l1: Some(noise_l1.max(defect_l1)),
        regime,
        sigma_k: Some(sigma_k),
        caveat_flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Signal;
    use crate::Direction;
    use approx::assert_relative_eq;

    fn rho(value: f64, q: QParam, s: f64, n: usize) -> CmsvEstimate {
        CmsvEstimate {
            value,
            minimizer: Signal::zeros(n),
            trial_values: vec![value],
            direction: Direction::UpperBound,
            q,
            s,
            converged_trials: 1,
            residual: 0.0,
        }
    }

    const Q2: QParam = QParam::Finite(2.0);

    #[test]
    fn exact_sparse_examples() {
        let bp = NoiseModel::L2Ball { eps: 1.0 };
        let r = bound_theorem1(&rho(0.5, Q2, 8.0, 40), 2, Q2, bp).unwrap();
        assert_relative_eq!(r.bound_lq, 4.0, max_relative = 1e-15);
        assert_relative_eq!(r.bound_l1, 8.0 * 2f64.sqrt(), max_relative = 1e-15);
        assert_eq!(r.caveat_flags, vec![Caveat::RhoUpperBound]);

        let ds = NoiseModel::CorrelatedInf { lambda_sigma: 1.0 };
        let r = bound_theorem1(&rho(1.0, Q2, 4.0, 40), 1, Q2, ds).unwrap();
        assert_eq!((r.bound_lq, r.bound_l1), (4.0, 8.0));

        let zero = NoiseModel::L2Ball { eps: 0.0 };
        let r = bound_theorem1(&rho(0.3, Q2, 4.0, 40), 1, Q2, zero).unwrap();
        assert_eq!((r.bound_lq, r.bound_l1), (0.0, 0.0));
    }

    #[test]
    fn compressible_examples() {
        let bp = NoiseModel::L2Ball { eps: 0.0 };
        let r = bound_theorem2(&rho(1.0, Q2, 16.0, 40), 1, Q2, bp, 3.0).unwrap();
        assert_eq!((r.bound_lq, r.bound_l1), (3.0, 12.0));

        let lasso = NoiseModel::LassoPen { lambda_sigma: 0.0, kappa: 0.5 };
        assert_eq!(required_s(&lasso, Regime::Compressible, 1, Q2), 64.0);
        let r = bound_theorem2(&rho(1.0, Q2, 40.0, 40), 1, Q2, lasso, 1.0).unwrap();
        assert_eq!(r.bound_l1, 8.0);
        assert!(r.caveat_flags.contains(&Caveat::SClampedToN));
    }

    #[test]
    fn zero_defect_matches_exact_form_at_larger_s() {
        let bp = NoiseModel::L2Ball { eps: 0.7 };
        let q = QParam::Finite(3.0);
        let s = required_s(&bp, Regime::Compressible, 2, q);
        let est = rho(0.4, q, s, 100);
        let r2 = bound_theorem2(&est, 2, q, bp, 0.0).unwrap();
        assert_relative_eq!(r2.bound_lq, 2.0 * 0.7 / 0.4, max_relative = 1e-15);
        assert_relative_eq!(r2.bound_l1, 4.0 * 2f64.powf(2.0 / 3.0) * 0.7 / 0.4, max_relative = 1e-15);
        assert_eq!(r2.sharpened_lq, Some(r2.bound_lq));
    }

    #[test]
    fn infinity_exponents() {
        let bp = NoiseModel::L2Ball { eps: 1.0 };
        assert_eq!(required_s(&bp, Regime::ExactSparse, 3, QParam::Infinity), 6.0);
        let r = bound_theorem1(&rho(0.5, QParam::Infinity, 6.0, 40), 3, QParam::Infinity, bp).unwrap();
        assert_eq!(r.bound_l1, 4.0 * 3.0 * 1.0 / 0.5);
    }

    #[test]
    fn error_cases() {
        let bp = NoiseModel::L2Ball { eps: 1.0 };
        assert!(matches!(
            bound_theorem1(&rho(0.0, Q2, 4.0, 40), 1, Q2, bp),
            Err(Error::NotApplicable(_))
        ));
        assert_eq!(
            bound_theorem1(&rho(0.5, Q2, 3.0, 40), 1, Q2, bp).unwrap_err(),
            Error::SMismatch { expected: 4.0, found: 3.0 }
        );
        let bad_kappa = NoiseModel::LassoPen { lambda_sigma: 1.0, kappa: 1.0 };
        assert!(bound_theorem1(&rho(0.5, Q2, 4.0, 40), 1, Q2, bad_kappa).is_err());
        assert!(bound_theorem1(&rho(0.5, Q2, 4.0, 40), 0, Q2, bp).is_err());
    }
}
