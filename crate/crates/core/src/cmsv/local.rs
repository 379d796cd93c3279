//! One local minimisation of `||A z||_2^2` over `{||z||_1 <= R, ||z||_q = 1}`.
//!
//! Each step linearises the sphere constraint at the current point `z`: with
//! `g` the gradient of `||.||_q` at `z` (so `g'z = ||z||_q = 1` and the dual
//! norm of `g` is 1), the set `T = {||w||_1 <= R, g'w >= 1}` is convex,
//! contains `z`, and every `w` in it has `||w||_q >= 1`. A projected gradient
//! step into `T` followed by rescaling onto the sphere keeps feasibility and
//! never increases the objective, because the objective is homogeneous of
//! degree two.

use nalgebra::{DMatrix, DVector};

use crate::kernels::project_l1_ball_into;
use crate::signal::{lq_norm, QParam};

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;

pub(crate) struct LocalProblem<'a> {
    pub a: &'a DMatrix<f64>,
    pub q: QParam,
    pub radius: f64,
    /// Upper bound on the Lipschitz constant of the gradient, `2 ||A||_F^2`.
    pub lipschitz: f64,
}

pub(crate) struct LocalResult {
    pub z: DVector<f64>,
    pub value: f64,
    pub residual: f64,
    pub converged: bool,
}

struct Scratch {
    sorted: Vec<f64>,
    shifted: Vec<f64>,
}

/// Gradient of `||.||_q` at `z`, with `g'z = ||z||_q`. For `q = ∞` this is the
/// signed unit vector at the first entry of largest magnitude.
pub(crate) fn norm_gradient(z: &DVector<f64>, q: QParam) -> DVector<f64> {
    let zmax = z.amax();
    let mut g = DVector::zeros(z.len());
    if zmax == 0.0 {
        return g;
    }
    match q {
        QParam::Infinity => {
            let j = z.iter().position(|v| v.abs() == zmax).expect("max entry exists");
            g[j] = z[j].signum();
        }
        _ => {
            let qv = q.value();
            let scaled_norm = lq_norm(z.as_slice(), q) / zmax;
            let denom = scaled_norm.powf(qv - 1.0);
            for (gi, &zi) in g.iter_mut().zip(z.iter()) {
                if zi != 0.0 {
                    *gi = zi.signum() * (zi.abs() / zmax).powf(qv - 1.0) / denom;
                }
            }
        }
    }
    g
}

impl LocalProblem<'_> {
    fn objective(&self, z: &DVector<f64>) -> (f64, DVector<f64>) {
        let az = self.a * z;
        (az.norm_squared(), az)
    }

    fn gradient(&self, az: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(az) * 2.0
    }

    fn ball(&self, v: &DVector<f64>, scratch: &mut Scratch) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        project_l1_ball_into(v.as_slice(), self.radius, out.as_mut_slice(), &mut scratch.sorted);
        out
    }

    /// Euclidean projection of `v` onto `T = {||w||_1 <= R, g'w >= 1}`.
    ///
    /// The solution is `P(v + mu g)` for the ball projection `P` and the
    /// smallest `mu >= 0` with `g'P(v + mu g) >= 1`; that function of `mu` is
    /// non-decreasing, so the root is bracketed and refined by the Illinois
    /// variant of regula falsi. The point returned is always on the feasible
    /// side. `None` means `T` could not be reached (numerically empty).
    fn project_t(&self, v: &DVector<f64>, g: &DVector<f64>, scratch: &mut Scratch) -> Option<DVector<f64>> {
        let w0 = self.ball(v, scratch);
        let phi0 = g.dot(&w0) - 1.0;
        if phi0 >= 0.0 {
            return Some(w0);
        }
        let eval = |mu: f64, scratch: &mut Scratch| {
            scratch.shifted.clear();
            scratch.shifted.extend(v.iter().zip(g.iter()).map(|(a, b)| a + mu * b));
            let mut w = DVector::zeros(v.len());
            project_l1_ball_into(&scratch.shifted, self.radius, w.as_mut_slice(), &mut scratch.sorted);
            let phi = g.dot(&w) - 1.0;
            (phi, w)
        };

        let (mut lo, mut flo) = (0.0, phi0);
        let mut hi = v.amax().max(1.0);
        let (mut fhi, mut whi) = eval(hi, scratch);
        let mut doublings = 0;
        while fhi < 0.0 {
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            (fhi, whi) = eval(hi, scratch);
            doublings += 1;
            if doublings > 80 {
                return None;
            }
        }
        let mut side = 0i8;
        for _ in 0..100 {
            if fhi <= 1e-15 || hi - lo <= 1e-15 * hi {
                break;
            }
            let mut mid = hi - fhi * (hi - lo) / (fhi - flo);
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let (fm, wm) = eval(mid, scratch);
            if fm >= 0.0 {
                hi = mid;
                fhi = fm;
                whi = wm;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            } else {
                lo = mid;
                flo = fm;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            }
        }
        Some(whi)
    }

    fn normalize(&self, w: DVector<f64>) -> DVector<f64> {
        let n = lq_norm(w.as_slice(), self.q);
        w / n
    }

    /// Projected-gradient iterations from a feasible `start`.
    pub fn minimize(&self, start: DVector<f64>, max_iter: usize, tol: f64) -> LocalResult {
        let mut scratch = Scratch {
            sorted: Vec::with_capacity(start.len()),
            shifted: Vec::with_capacity(start.len()),
        };
        let mut z = start;
        let (mut f, az) = self.objective(&z);
        let mut grad = self.gradient(&az);
        let inv_l = 1.0 / self.lipschitz;
        let mut step = inv_l;
        let mut residual = f64::INFINITY;
        let mut converged = false;

        for _ in 0..max_iter {
            let g = norm_gradient(&z, self.q);
            residual = match self.project_t(&(&z - &grad * inv_l), &g, &mut scratch) {
                Some(p) => (&z - p).norm(),
                None => 0.0,
            };
            if residual <= tol {
                converged = true;
                break;
            }

            let mut accepted = None;
            for _ in 0..MAX_BACKTRACK {
                let Some(w) = self.project_t(&(&z - &grad * step), &g, &mut scratch) else {
                    break;
                };
                let (fw, _) = self.objective(&w);
                if fw <= f - ARMIJO / step * (&w - &z).norm_squared() {
                    accepted = Some(w);
                    break;
                }
                step *= 0.5;
            }
            let Some(w) = accepted else {
                // no descent is possible along the projected arc
                converged = residual <= tol.sqrt();
                break;
            };
            let z_next = self.normalize(w);
            let (f_next, az_next) = self.objective(&z_next);
            let grad_next = self.gradient(&az_next);

            let s = &z_next - &z;
            let y = &grad_next - &grad;
            let sy = s.dot(&y);
            step = if sy > 0.0 { s.norm_squared() / sy } else { inv_l };
            step = step.clamp(1e-6 * inv_l, 1e6 * inv_l);

            z = z_next;
            f = f_next;
            grad = grad_next;
        }
        let value = (self.a * &z).norm() / lq_norm(z.as_slice(), self.q);
        LocalResult {
            z,
            value,
            residual,
            converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gradient_pairs_to_norm() {
        let z = DVector::from_vec(vec![3.0, -4.0, 0.0, 1.0]);
        for q in [QParam::Finite(1.5), QParam::Finite(2.0), QParam::Finite(7.0), QParam::Infinity] {
            let g = norm_gradient(&z, q);
            assert_relative_eq!(g.dot(&z), lq_norm(z.as_slice(), q), max_relative = 1e-14);
            // dual norm of g is one
            let dual = match q {
                QParam::Infinity => g.lp_norm(1),
                _ => {
                    let qv = q.value();
                    let qs = qv / (qv - 1.0);
                    g.iter().map(|v| v.abs().powf(qs)).sum::<f64>().powf(1.0 / qs)
                }
            };
            assert_relative_eq!(dual, 1.0, max_relative = 1e-14);
        }
        assert_eq!(norm_gradient(&z, QParam::Infinity)[1], -1.0);
    }

    #[test]
    fn projection_lands_in_linearised_set() {
        let a = DMatrix::identity(4, 4);
        let p = LocalProblem {
            a: &a,
            q: QParam::Finite(2.0),
            radius: 1.5,
            lipschitz: 8.0,
        };
        let mut scratch = Scratch {
            sorted: Vec::new(),
            shifted: Vec::new(),
        };
        let z = DVector::from_vec(vec![0.8, 0.6, 0.0, 0.0]);
        let g = norm_gradient(&z, p.q);
        let v = DVector::from_vec(vec![0.1, -0.2, 0.3, 0.05]);
        let w = p.project_t(&v, &g, &mut scratch).unwrap();
        assert!(w.lp_norm(1) <= 1.5 + 1e-12);
        assert!(g.dot(&w) >= 1.0 - 1e-12);
        // optimality against feasible perturbations
        for u in [&z, &(&z * 1.1)] {
            let u = p.ball(u, &mut scratch);
            if g.dot(&u) >= 1.0 {
                assert!((&v - &w).dot(&(u - &w)) <= 1e-9);
            }
        }
    }
}
