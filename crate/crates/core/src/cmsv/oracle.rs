//! Sampling oracle for `rho_{q,s}` on very small matrices.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};
use serde::Serialize;

use super::{l1_radius, validate_qs};
use crate::error::{Error, Result};
use crate::kernels::project_l1_ball;
use crate::rng::{purpose, stream};
use crate::signal::{lq_norm, MeasurementMatrix, QParam};

const POLISH_CANDIDATES: usize = 100;
const POLISH_STEPS: usize = 3000;
const SUCCESS_GROWTH: f64 = 1.3956124250860895; // e^{1/3}
const SNAP_FRACTION: f64 = 0.25;
const FAILURE_SHRINK: f64 = 0.9200444146293233; // e^{-1/12}
/// Relative slack used when comparing oracle values, which sit above the
/// true minima by an amount that shrinks with the sample count.
pub const ORACLE_REL_TOL: f64 = 1e-2;

/// Points on the unit `l_q` sphere of `R^N`, shared between oracle calls so
/// that results for different `s` (and different matrices of the same width)
/// are computed on one sample set.
///
/// Directions come from the generalized Gaussian density `exp(-|x|^q)`,
/// whose normalization onto the sphere is uniform in the cone measure; for
/// `q = ∞` the coordinates are uniform on `[-1, 1]`. Every other sample is
/// drawn the same way inside a coordinate subspace, cycling through all
/// supports. The signed basis vectors are always included.
#[derive(Debug, Clone)]
pub struct SamplePool {
    n: usize,
    q: QParam,
    seed: u64,
    points: Vec<f64>,
}

impl SamplePool {
    pub fn new(n: usize, q: QParam, n_samples: usize, seed: u64) -> Result<Self> {
        q.require_super_linear()?;
        if n == 0 || n > 20 {
            return Err(Error::invalid("sample pools support 1 <= N <= 20"));
        }
        let mut points = Vec::with_capacity((n_samples + 2 * n) * n);
        for i in 0..n {
            for sign in [1.0, -1.0] {
                points.extend((0..n).map(|j| if j == i { sign } else { 0.0 }));
            }
        }
        let mut rng = stream(seed, purpose::ORACLE_SAMPLES, 0);
        let gamma = match q {
            QParam::Finite(qv) => Some((Gamma::new(1.0 / qv, 1.0).expect("valid shape"), qv)),
            _ => None,
        };
        // Half of the samples are spread over the coordinate subspaces, since
        // minimisers often sit on thin cusps of the feasible set near sparse
        // vectors that uniform sampling almost never hits.
        let supports: Vec<u32> = (1u32..(1 << n)).collect();
        let mut x = vec![0.0; n];
        for i in 0..n_samples {
            let mask = if i % 2 == 0 { u32::MAX } else { supports[(i / 2) % supports.len()] };
            for (j, xi) in x.iter_mut().enumerate() {
                if mask >> j & 1 == 0 {
                    *xi = 0.0;
                    continue;
                }
                *xi = match gamma {
                    Some((g, qv)) => {
                        let mag = rng.sample(g).powf(1.0 / qv);
                        if rng.random::<bool>() {
                            mag
                        } else {
                            -mag
                        }
                    }
                    None => rng.random_range(-1.0..1.0),
                };
            }
            let norm = lq_norm(&x, q);
            if norm > 0.0 {
                points.extend(x.iter().map(|v| v / norm));
            }
        }
        Ok(SamplePool { n, q, seed, points })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Oracle value for `(a, s)`: best feasible samples, each polished by a
    /// derivative-free local search, minimum returned.
    pub fn evaluate(&self, a: &MeasurementMatrix, s: f64) -> Result<f64> {
        Ok(self.minimize(a, s)?.0)
    }

    /// Like [`SamplePool::evaluate`], also returning the best point found.
    pub fn minimize(&self, a: &MeasurementMatrix, s: f64) -> Result<(f64, DVector<f64>)> {
        if a.ncols() != self.n {
            return Err(Error::invalid("sample pool dimension does not match the matrix"));
        }
        validate_qs(a, self.q, s)?;
        let radius = l1_radius(self.q, s);
        let m = a.matrix();
        let mut scored: Vec<(f64, usize)> = Vec::new();
        // best sample per sign pattern, so every basin gets polished
        let mut per_pattern: HashMap<u64, (f64, usize)> = HashMap::new();
        let mut az = DVector::zeros(m.nrows());
        for (idx, p) in self.points.chunks_exact(self.n).enumerate() {
            if p.iter().map(|v| v.abs()).sum::<f64>() > radius * (1.0 + 1e-12) {
                continue;
            }
            az.fill(0.0);
            for (j, &pj) in p.iter().enumerate() {
                if pj != 0.0 {
                    az.axpy(pj, &m.column(j), 1.0);
                }
            }
            let v = az.norm();
            let slot = per_pattern.entry(sign_pattern(p)).or_insert((v, idx));
            if v < slot.0 {
                *slot = (v, idx);
            }
            scored.push((v, idx));
            if scored.len() >= 8 * POLISH_CANDIDATES {
                keep_best(&mut scored);
            }
        }
        keep_best(&mut scored);
        let mut extra: Vec<(f64, usize)> = per_pattern.into_values().collect();
        extra.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for c in extra {
            if !scored.iter().any(|s| s.1 == c.1) {
                scored.push(c);
            }
        }
        let mut best = (f64::INFINITY, DVector::zeros(self.n));
        for (rank, &(_, idx)) in scored.iter().enumerate() {
            let start = DVector::from_column_slice(&self.points[idx * self.n..(idx + 1) * self.n]);
            let found = polish(m, self.q, radius, start, stream(self.seed, purpose::ORACLE_POLISH, rank as u64));
            if found.0 < best.0 {
                best = found;
            }
        }
        Ok(best)
    }
}

/// Sign pattern of a point up to global sign, with entries below a tenth of
/// the largest magnitude counted as zero (base-3 digits).
fn sign_pattern(p: &[f64]) -> u64 {
    let cut = 0.1 * p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lead = p.iter().find(|v| v.abs() > cut).map_or(1.0, |v| v.signum());
    p.iter().fold(0u64, |code, &v| {
        let digit = if v.abs() <= cut { 0 } else if v * lead > 0.0 { 1 } else { 2 };
        code * 3 + digit
    })
}

fn keep_best(scored: &mut Vec<(f64, usize)>) {
    scored.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    scored.truncate(POLISH_CANDIDATES);
}

/// Pulls `w` onto the unit `l_q` sphere inside the `l_1` ball by alternating
/// rescaling and ball projection.
fn retract(w: DVector<f64>, q: QParam, radius: f64) -> Option<DVector<f64>> {
    let norm = lq_norm(w.as_slice(), q);
    if norm == 0.0 {
        return None;
    }
    let mut w = w / norm;
    for _ in 0..4 {
        if w.lp_norm(1) <= radius * (1.0 + 1e-12) {
            return Some(w);
        }
        let p = DVector::from_vec(project_l1_ball(w.as_slice(), radius));
        let norm = lq_norm(p.as_slice(), q);
        if norm == 0.0 {
            return None;
        }
        w = p / norm;
    }
    (w.lp_norm(1) <= radius * (1.0 + 1e-12)).then_some(w)
}

/// (1+1) evolution strategy on the feasible set with the one-fifth success
/// rule. With `on_support` the zero entries of the start stay zero.
fn evolve(a: &DMatrix<f64>, q: QParam, radius: f64, start: DVector<f64>, on_support: bool, rng: &mut impl Rng) -> (f64, DVector<f64>) {
    let eval = |z: &DVector<f64>| (a * z).norm();
    let mut z = start;
    let mut best = eval(&z);
    let mut step = 0.1;
    for _ in 0..POLISH_STEPS {
        let noise = DVector::from_fn(z.len(), |i, _| {
            let v: f64 = rng.sample(StandardNormal);
            if on_support && z[i] == 0.0 {
                0.0
            } else {
                v
            }
        });
        match retract(&z + noise * step, q, radius) {
            Some(w) if eval(&w) < best => {
                best = eval(&w);
                z = w;
                step *= SUCCESS_GROWTH;
            }
            _ => step *= FAILURE_SHRINK,
        }
        if step < 1e-12 {
            break;
        }
        step = step.min(1.0);
    }
    (best, z)
}

/// Local search from a sample: a free search, then for each small entry a
/// search on the support with that entry set to zero, since minimisers often
/// sit on edges of the `l_1` ball that random moves cannot hold.
fn polish(a: &DMatrix<f64>, q: QParam, radius: f64, start: DVector<f64>, mut rng: impl Rng) -> (f64, DVector<f64>) {
    let mut best = evolve(a, q, radius, start, false, &mut rng);
    loop {
        let zmax = best.1.amax();
        let mut improved = false;
        for j in 0..best.1.len() {
            let zj = best.1[j];
            if zj == 0.0 || zj.abs() > SNAP_FRACTION * zmax {
                continue;
            }
            let mut snapped = best.1.clone();
            snapped[j] = 0.0;
            let Some(snapped) = retract(snapped, q, radius) else {
                continue;
            };
            let found = evolve(a, q, radius, snapped, true, &mut rng);
            if found.0 < best.0 {
                best = found;
                improved = true;
                break;
            }
        }
        if !improved {
            return best;
        }
    }
}

/// Sampling estimate of `rho_{q,s}(A)`: a stochastic upper bound that
/// approaches the true value from above as `n_samples` grows. Intended for
/// `N <= 6`.
pub fn brute_force_cmsv(a: &MeasurementMatrix, q: QParam, s: f64, n_samples: usize, seed: u64) -> Result<f64> {
    validate_qs(a, q, s)?;
    SamplePool::new(a.ncols(), q, n_samples, seed)?.evaluate(a, s)
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop2Report {
    pub q1: QParam,
    pub q2: QParam,
    pub s: f64,
    /// `q2 (q1 - 1) / (q1 (q2 - 1))`.
    pub e: f64,
    pub rho_q1_s: f64,
    pub rho_q2_se: f64,
    pub rho_q1_se: f64,
    /// `s^{-e} rho_{q1, s^e}`.
    pub lower: f64,
    pub tol: f64,
    pub holds: bool,
}

/// Exponent relating the sparsity levels of two orders `q1 >= q2 > 1`.
pub fn order_exponent(q1: QParam, q2: QParam) -> f64 {
    q1.radius_exponent() * q2.sparsity_exponent()
}

/// Checks `rho_{q1,s} >= rho_{q2,s^e} >= s^{-e} rho_{q1,s^e}` on oracle values,
/// for `1 < q2 <= q1 <= ∞` and `1 <= s <= N^{1/e}`.
pub fn check_proposition2(a: &MeasurementMatrix, q1: QParam, q2: QParam, s: f64, oracle_samples: usize, seed: u64) -> Result<Prop2Report> {
    if !(q1.is_super_linear() && q2.is_super_linear() && q2.value() <= q1.value()) {
        return Err(Error::InvalidOrder {
            q1: q1.value(),
            q2: q2.value(),
        });
    }
    let e = order_exponent(q1, q2);
    let n = a.ncols() as f64;
    let se = s.powf(e);
    if !(s >= 1.0 && se <= n * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "s = {s} outside [1, N^(1/e)] with e = {e}"
        )));
    }
    let se = se.min(n);
    let pool1 = SamplePool::new(a.ncols(), q1, oracle_samples, seed)?;
    let pool2 = SamplePool::new(a.ncols(), q2, oracle_samples, seed)?;
    let rho_q1_s = pool1.evaluate(a, s)?;
    let rho_q1_se = pool1.evaluate(a, se)?;
    let rho_q2_se = pool2.evaluate(a, se)?;
    let lower = rho_q1_se / se;
    let tol = ORACLE_REL_TOL * rho_q1_s.max(rho_q2_se) + 1e-9;
    Ok(Prop2Report {
        q1,
        q2,
        s,
        e,
        rho_q1_s,
        rho_q2_se,
        rho_q1_se,
        lower,
        tol,
        holds: rho_q1_s >= rho_q2_se - tol && rho_q2_se >= lower - tol,
    })
}
