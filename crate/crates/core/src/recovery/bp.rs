//! Basis Pursuit by ADMM on the split `min ||z||_1 + I_C(x)  s.t.  x = z`,
//! where `C = {x : ||A x - y||_2 <= eps}`.
//!
//! The projection onto `C` is exact: with the thin SVD `A = U S V'`, moving
//! `v` to the boundary of `C` only changes its coordinates in `V`, and the
//! Lagrange multiplier solves a one-dimensional secular equation. The penalty
//! is adapted by residual balancing. After convergence the iterate is
//! replaced by the closed-form solution on its support when that is feasible
//! and no worse.

use nalgebra::{DMatrix, DVector};

use super::support::{support_of, Restricted};
use super::{check_dims, check_param, RecoveryResult};
use crate::error::{Error, Result};
use crate::kernels::{soft_threshold, SolverConfig};
use crate::signal::{MeasurementMatrix, Signal};

const RANK_TOL: f64 = 1e-12;
const BALANCE_RATIO: f64 = 10.0;
const BALANCE_EVERY: usize = 10;
const SUPPORT_REL: f64 = 1e-7;

struct Cylinder {
    v: DMatrix<f64>,
    sigma: DVector<f64>,
    /// `U'y`.
    b: DVector<f64>,
    /// Squared distance from `y` to the range of `A`.
    perp: f64,
    eps: f64,
}

impl Cylinder {
    fn new(a: &DMatrix<f64>, y: &DVector<f64>, eps: f64) -> Self {
        let svd = a.clone().svd(true, true);
        let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > RANK_TOL * smax.max(f64::MIN_POSITIVE))
            .collect();
        let u = u.select_columns(&keep);
        let v = v_t.select_rows(&keep).transpose();
        let sigma = DVector::from_iterator(keep.len(), keep.iter().map(|&i| svd.singular_values[i]));
        let b = u.tr_mul(y);
        let perp = (y.norm_squared() - b.norm_squared()).max(0.0);
        Cylinder { v, sigma, b, perp, eps }
    }

    fn project(&self, p: &DVector<f64>) -> DVector<f64> {
        let a = self.v.tr_mul(p);
        let c = a.component_mul(&self.sigma) - &self.b;
        let target = self.eps * self.eps - self.perp;
        if c.norm_squared() <= target {
            return p.clone();
        }
        let shift = if target <= 0.0 {
            // limit of infinite multiplier: land on the affine set
            -c.component_div(&self.sigma)
        } else {
            let lambda = self.multiplier(&c, target);
            DVector::from_fn(a.len(), |i, _| {
                let s = self.sigma[i];
                -lambda * s * c[i] / (1.0 + lambda * s * s)
            })
        };
        p + &self.v * shift
    }

    /// Root of `sum c_i^2 / (1 + l s_i^2)^2 = target` by safeguarded Newton on
    /// the reciprocal square root, which is close to linear in `l`.
    fn multiplier(&self, c: &DVector<f64>, target: f64) -> f64 {
        let g = |l: f64| -> (f64, f64) {
            let mut f = 0.0;
            let mut df = 0.0;
            for i in 0..c.len() {
                let w = 1.0 + l * self.sigma[i] * self.sigma[i];
                f += c[i] * c[i] / (w * w);
                df -= 2.0 * c[i] * c[i] * self.sigma[i] * self.sigma[i] / (w * w * w);
            }
            let inv = 1.0 / f.sqrt();
            (inv - 1.0 / target.sqrt(), -0.5 * inv * inv * inv * df)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while g(hi).0 < 0.0 && hi < 1e300 {
            lo = hi;
            hi *= 2.0;
        }
        let mut l = lo;
        for _ in 0..100 {
            let (val, der) = g(l);
            if val.abs() <= 1e-15 / target.sqrt() {
                break;
            }
            if val < 0.0 {
                lo = l;
            } else {
                hi = l;
            }
            let newton = l - val / der;
            l = if der > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        l
    }
}

/// Basis Pursuit. `cfg.step` is the initial ADMM penalty.
pub fn solve_bp(a: &MeasurementMatrix, y: &Signal, eps: f64, cfg: &SolverConfig) -> Result<RecoveryResult> {
    check_dims(a, y)?;
    check_param("eps", eps)?;
    cfg.validate()?;
    let m = a.matrix();
    let n = m.ncols();
    let yv = y.vector();
    let cyl = Cylinder::new(m, yv, eps);
    let feas_tol = 1e-7 * (1.0 + yv.norm());
    if cyl.perp.sqrt() > eps + feas_tol {
        return Err(Error::Infeasible);
    }

    let mut rho = cfg.step;
    let mut z = DVector::zeros(n);
    let mut u = DVector::zeros(n);
    let mut x = cyl.project(&z);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let sqrt_n = (n as f64).sqrt();
    while iterations < cfg.max_iter {
        iterations += 1;
        x = cyl.project(&(&z - &u));
        let z_old = z;
        z = DVector::from_vec(soft_threshold((&x + &u).as_slice(), 1.0 / rho));
        u += &x - &z;
        let r = (&x - &z).norm();
        let s = rho * (&z - &z_old).norm();
        trace.push(r);
        let eps_pri = cfg.tol_primal * (sqrt_n + x.norm().max(z.norm()));
        let eps_dual = cfg.tol_primal * (sqrt_n + rho * u.norm());
        if r <= eps_pri && s <= eps_dual {
            converged = true;
            break;
        }
        if iterations % BALANCE_EVERY == 0 {
            if r > BALANCE_RATIO * s {
                rho *= 2.0;
                u /= 2.0;
            } else if s > BALANCE_RATIO * r {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }

    let feasible = |c: &DVector<f64>| (yv - m * c).norm() <= eps + feas_tol;
    let mut x_hat = x;
    if let Some(r) = Restricted::new(m, &z, support_of(&z, SUPPORT_REL)) {
        if let Some(c) = r.bp(yv, eps, n) {
            if feasible(&c) && c.lp_norm(1) <= x_hat.lp_norm(1) * (1.0 + 1e-9) + 1e-12 {
                x_hat = c;
            }
        }
    }
    let objective = x_hat.lp_norm(1);
    Ok(RecoveryResult {
        x_hat: Signal::from_vector(x_hat)?,
        iterations,
        primal_residuals: trace,
        converged,
        objective,
    })
}
