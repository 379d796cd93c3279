//! Dense revised simplex for `maximize c'x  s.t.  Ax = b, x >= 0`.
//!
//! Two phases with one artificial column per row. The basis inverse is kept
//! explicitly (stored transposed so row operations are contiguous), updated
//! by elementary pivots and rebuilt from an LU factorization every
//! [`REFACTOR_EVERY`] pivots. Pricing is Dantzig's rule. A run of degenerate
//! pivots switches phase one to Bland's rule; in phase two it instead
//! perturbs the basic values by tiny positive amounts, and once the perturbed
//! problem is optimal the perturbation is removed and any resulting primal
//! infeasibility is repaired by dual simplex pivots.
//!
//! A solved [`Simplex`] keeps its optimal basis, so re-optimising the same
//! constraints under a new objective starts from a feasible vertex.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const REFACTOR_EVERY: usize = 64;
const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 40;
const NONBASIC: usize = usize::MAX;
/// Relative size of the phase-two bound perturbation.
const PERTURB: f64 = 1e-7;
/// Perturbation rounds before phase two falls back to Bland's rule.
const MAX_PERTURB_ROUNDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    MaxIter,
    Infeasible,
    Unbounded,
}

/// `maximize c'x  s.t.  a x = b, x >= 0`.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    /// Multipliers of the equality rows, `c - a'y <= 0` at optimality.
    pub duals: DVector<f64>,
    pub status: LpStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Simplex {
    a: DMatrix<f64>,
    b: DVector<f64>,
    row_sign: Vec<f64>,
    n: usize,
    basis: Vec<usize>,
    position: Vec<usize>,
    binv_t: DMatrix<f64>,
    xb: DVector<f64>,
    /// Right-hand side shift of an active perturbation.
    shift: Option<DVector<f64>>,
    since_refactor: usize,
}

impl StandardLp {
    pub fn solve(&self, max_iter: usize) -> Result<SimplexOutcome> {
        let mut s = Simplex::new(&self.a, &self.b, max_iter)?;
        Ok(s.maximize(&self.c, max_iter))
    }
}

impl Simplex {
    /// Finds a feasible basis for `{x >= 0 : a x = b}` (phase one).
    pub fn new(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> Result<Self> {
        let (rows, n) = a.shape();
        if b.len() != rows {
            return Err(Error::invalid("simplex: rhs length does not match rows"));
        }
        let row_sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut full = DMatrix::zeros(rows, n + rows);
        for i in 0..rows {
            for j in 0..n {
                full[(i, j)] = row_sign[i] * a[(i, j)];
            }
            full[(i, n + i)] = 1.0;
        }
        let b_signed = DVector::from_fn(rows, |i, _| row_sign[i] * b[i]);
        let mut position = vec![NONBASIC; n + rows];
        for i in 0..rows {
            position[n + i] = i;
        }
        let mut s = Simplex {
            a: full,
            xb: b_signed.clone(),
            b: b_signed,
            row_sign,
            n,
            basis: (n..n + rows).collect(),
            position,
            binv_t: DMatrix::identity(rows, rows),
            shift: None,
            since_refactor: 0,
        };

        s.crash_unit_columns();

        let mut cost = vec![0.0; n + rows];
        cost[n..].fill(-1.0);
        let (status, _) = s.run(&cost, true, max_iter);
        if status == LpStatus::MaxIter {
            return Err(Error::NotConverged {
                context: Some("simplex phase one".into()),
            });
        }
        if s.artificial_level() > s.feasibility_tol() {
            return Err(Error::Infeasible);
        }
        s.drive_out_artificials();
        Ok(s)
    }

    pub fn structural_len(&self) -> usize {
        self.n
    }

    /// Phase two from the current basis. Artificial columns never re-enter.
    pub fn maximize(&mut self, c: &DVector<f64>, max_iter: usize) -> SimplexOutcome {
        assert_eq!(c.len(), self.n, "objective length must match columns");
        let rows = self.b.len();
        let mut cost = vec![0.0; self.n + rows];
        cost[..self.n].copy_from_slice(c.as_slice());
        let (status, iterations) = self.run(&cost, false, max_iter);
        let x = self.primal();
        let cb = DVector::from_fn(rows, |i, _| cost[self.basis[i]]);
        let y = &self.binv_t * cb;
        let duals = DVector::from_fn(rows, |i, _| y[i] * self.row_sign[i]);
        SimplexOutcome {
            value: c.dot(&x),
            x,
            duals,
            status,
            iterations,
        }
    }

    /// Replaces artificials by structural columns that are positive
    /// multiples of unit vectors (slacks), which are feasible immediately.
    fn crash_unit_columns(&mut self) {
        for j in 0..self.n {
            let col = self.a.column(j);
            let mut nonzero = col.iter().enumerate().filter(|(_, v)| **v != 0.0);
            let (Some((i, &v)), None) = (nonzero.next(), nonzero.next()) else {
                continue;
            };
            if v <= 0.0 || self.basis[i] < self.n {
                continue;
            }
            self.position[self.basis[i]] = NONBASIC;
            self.basis[i] = j;
            self.position[j] = i;
            self.binv_t[(i, i)] = 1.0 / v;
            self.xb[i] = self.b[i] / v;
        }
    }

    fn artificial_level(&self) -> f64 {
        (0..self.b.len())
            .filter(|&i| self.basis[i] >= self.n)
            .map(|i| self.xb[i].max(0.0))
            .sum()
    }

    fn feasibility_tol(&self) -> f64 {
        let scale = 1.0 + self.b.amax();
        1e-9 * scale * (self.b.len() as f64).max(1.0)
    }

    fn primal(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.n);
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.xb[i].max(0.0);
            }
        }
        x
    }

    fn run(&mut self, cost: &[f64], allow_artificial: bool, max_iter: usize) -> (LpStatus, usize) {
        let rows = self.b.len();
        let limit = if allow_artificial { self.n + rows } else { self.n };
        let cost_scale = cost.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if cost_scale == 0.0 || rows == 0 {
            return (LpStatus::Optimal, 0);
        }
        let dual_tol = DUAL_TOL * cost_scale;
        let mut bland = false;
        let mut degenerate = 0usize;
        let mut perturb_rounds = 0usize;

        let mut it = 0;
        while it < max_iter {
            it += 1;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            if allow_artificial && self.artificial_level() <= self.feasibility_tol() {
                // phase one has reached zero infeasibility; remaining
                // artificials sit at zero and are pivoted out afterwards
                return (LpStatus::Optimal, it - 1);
            }
            let y = self.simplex_multipliers(cost);

            let mut enter = None;
            let mut best = dual_tol;
            for j in 0..limit {
                if self.position[j] != NONBASIC {
                    continue;
                }
                let d = cost[j] - self.a.column(j).dot(&y);
                if bland {
                    if d > dual_tol {
                        enter = Some(j);
                        break;
                    }
                } else if d > best {
                    best = d;
                    enter = Some(j);
                }
            }
            let Some(q) = enter else {
                if self.shift.is_some() {
                    self.shift = None;
                    self.refactor();
                    if !self.dual_repair(cost, limit, max_iter, &mut it) {
                        return (LpStatus::MaxIter, max_iter);
                    }
                    degenerate = 0;
                    continue;
                }
                return (LpStatus::Optimal, it - 1);
            };

            let alpha = self.binv_t.tr_mul(&self.a.column(q));
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            for i in 0..rows {
                if alpha[i] <= PIVOT_TOL {
                    continue;
                }
                let t = self.xb[i].max(0.0) / alpha[i];
                let better = match leave {
                    None => true,
                    Some(r) => {
                        let tie = 1e-12 * (1.0 + theta);
                        if t < theta - tie {
                            true
                        } else if t <= theta + tie {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                alpha[i] > alpha[r]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some(i);
                    theta = t;
                }
            }
            let Some(r) = leave else {
                return (LpStatus::Unbounded, it);
            };
            self.pivot(r, q, &alpha, theta);

            if theta * best <= 1e-14 * (1.0 + theta) {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    if allow_artificial || perturb_rounds >= MAX_PERTURB_ROUNDS {
                        bland = true;
                    } else if self.shift.is_none() {
                        self.perturb(perturb_rounds);
                        perturb_rounds += 1;
                        degenerate = 0;
                    }
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        }
        (LpStatus::MaxIter, max_iter)
    }

    fn simplex_multipliers(&self, cost: &[f64]) -> DVector<f64> {
        let cb = DVector::from_fn(self.b.len(), |i, _| cost[self.basis[i]]);
        &self.binv_t * cb
    }

    /// Raises every basic value by a small deterministic amount, as if the
    /// right-hand side were `b + B eps`, so that no ratio test ties at zero.
    fn perturb(&mut self, round: usize) {
        let rows = self.b.len();
        let scale = PERTURB * (1.0 + self.b.amax());
        let eps = DVector::from_fn(rows, |i, _| {
            // fractional parts of a golden-ratio sequence, in [0.5, 1)
            let u = ((i + 7919 * round) as f64 * 0.618_033_988_749_895).fract();
            scale * (0.5 + 0.5 * u)
        });
        let b_mat = self.a.select_columns(self.basis.iter());
        self.shift = Some(b_mat * &eps);
        self.xb += eps;
    }

    /// Dual simplex pivots from a dual-feasible basis until the basic values
    /// are nonnegative. Returns `false` if the iteration budget runs out.
    fn dual_repair(&mut self, cost: &[f64], limit: usize, max_iter: usize, it: &mut usize) -> bool {
        let tol = 1e-9 * (1.0 + self.b.amax());
        while *it < max_iter {
            let (r, xr) = self.xb.argmin();
            if xr >= -tol {
                for v in self.xb.iter_mut() {
                    *v = v.max(0.0);
                }
                return true;
            }
            *it += 1;
            let y = self.simplex_multipliers(cost);
            let row = self.binv_t.column(r).clone_owned();
            let mut enter: Option<(usize, f64, f64)> = None;
            for j in 0..limit {
                if self.position[j] != NONBASIC {
                    continue;
                }
                let arj = row.dot(&self.a.column(j));
                if arj >= -PIVOT_TOL {
                    continue;
                }
                let d = (cost[j] - self.a.column(j).dot(&y)).min(0.0);
                let ratio = (d / arj).max(0.0);
                let better = match enter {
                    None => true,
                    Some((_, br, ba)) => ratio < br - 1e-15 || (ratio <= br + 1e-15 && arj < ba),
                };
                if better {
                    enter = Some((j, ratio, arj));
                }
            }
            let Some((q, _, _)) = enter else {
                // no pivot can fix the row: the infeasibility is rounding
                self.xb[r] = 0.0;
                continue;
            };
            let alpha = self.binv_t.tr_mul(&self.a.column(q));
            let theta = self.xb[r] / alpha[r];
            self.pivot(r, q, &alpha, theta);
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
        }
        false
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &DVector<f64>, theta: f64) {
        let rows = self.b.len();
        for i in 0..rows {
            if i != r {
                self.xb[i] -= theta * alpha[i];
            }
        }
        self.xb[r] = theta;

        let pivot_col = self.binv_t.column(r) / alpha[r];
        for i in 0..rows {
            if i != r && alpha[i] != 0.0 {
                self.binv_t.column_mut(i).axpy(-alpha[i], &pivot_col, 1.0);
            }
        }
        self.binv_t.set_column(r, &pivot_col);

        self.position[self.basis[r]] = NONBASIC;
        self.basis[r] = q;
        self.position[q] = r;
        self.since_refactor += 1;
    }

    fn refactor(&mut self) {
        self.since_refactor = 0;
        let b_mat = self.a.select_columns(self.basis.iter());
        if let Some(inv) = b_mat.try_inverse() {
            self.xb = match &self.shift {
                Some(shift) => &inv * (&self.b + shift),
                None => &inv * &self.b,
            };
            for v in self.xb.iter_mut() {
                if *v < 0.0 && *v > -1e-9 {
                    *v = 0.0;
                }
            }
            self.binv_t = inv.transpose();
        }
    }

    /// Pivots artificial columns out of the basis at zero level. Rows where no
    /// structural column has a usable pivot are redundant; their artificial
    /// stays basic at zero and never moves again.
    fn drive_out_artificials(&mut self) {
        let rows = self.b.len();
        for r in 0..rows {
            if self.basis[r] < self.n {
                continue;
            }
            let row = self.binv_t.column(r).clone_owned();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.position[j] != NONBASIC {
                    continue;
                }
                let v = row.dot(&self.a.column(j)).abs();
                let norm = self.a.column(j).norm();
                if v > 1e-7 * norm.max(1e-300) && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.binv_t.tr_mul(&self.a.column(q));
                self.pivot(r, q, &alpha, 0.0);
                // the leaving artificial sat at (numerically) zero
                for v in self.xb.iter_mut() {
                    if *v < 0.0 && *v > -1e-9 {
                        *v = 0.0;
                    }
                }
            }
        }
        self.refactor();
    }
}
