use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::simplex::{LpStatus, Simplex, SimplexOutcome};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::signal::Signal;

/// `maximize c'z  s.t.  A_eq z = b_eq, ||z||_1 <= r`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub c: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpSolution {
    #[serde(skip)]
    pub z: Signal,
    pub value: f64,
    pub status: LpStatus,
    /// `b'y + r ||c - A'y||_inf - value` for the multipliers `y` returned by
    /// the solver. Any `y` gives an upper bound on the optimum, so this is a
    /// certificate of optimality whenever it is small.
    pub duality_gap: f64,
    pub primal_violation: f64,
    pub iterations: usize,
}

impl LpProblem {
    pub fn new(c: DVector<f64>, a_eq: DMatrix<f64>, b_eq: DVector<f64>, r: f64) -> Result<Self> {
        let n = c.len();
        if n == 0 {
            return Err(Error::invalid("LP needs at least one variable"));
        }
        if a_eq.ncols() != n && a_eq.nrows() > 0 {
            return Err(Error::invalid("equality matrix columns must match objective length"));
        }
        if a_eq.nrows() != b_eq.len() {
            return Err(Error::invalid("equality matrix rows must match rhs length"));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::invalid("l1 bound must be finite and non-negative"));
        }
        let a_eq = if a_eq.nrows() == 0 { DMatrix::zeros(0, n) } else { a_eq };
        Ok(LpProblem { c, a_eq, b_eq, r })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// Standard-form data over `[u; v; t] >= 0` with `z = u - v` and slack `t`.
    fn standard_form(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.dim();
        let m = self.a_eq.nrows();
        let mut a = DMatrix::zeros(m + 1, 2 * n + 1);
        for i in 0..m {
            for j in 0..n {
                let v = self.a_eq[(i, j)];
                a[(i, j)] = v;
                a[(i, n + j)] = -v;
            }
        }
        a.row_mut(m).fill(1.0);
        let mut b = DVector::zeros(m + 1);
        b.rows_mut(0, m).copy_from(&self.b_eq);
        b[m] = self.r;
        (a, b)
    }

    fn lifted_objective(&self, c: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(2 * n + 1, |j, _| {
            if j < n {
                c[j]
            } else if j < 2 * n {
                -c[j - n]
            } else {
                0.0
            }
        })
    }

    /// Upper bound `b'y + r ||c - A'y||_inf` from equality multipliers `y`.
    pub fn dual_bound(&self, c: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let reduced = c - self.a_eq.tr_mul(y);
        self.b_eq.dot(y) + self.r * reduced.amax()
    }

    pub fn primal_violation(&self, z: &DVector<f64>) -> f64 {
        let eq = if self.a_eq.nrows() > 0 {
            (&self.a_eq * z - &self.b_eq).amax()
        } else {
            0.0
        };
        eq.max(z.lp_norm(1) - self.r)
    }

    fn finish(&self, c: &DVector<f64>, out: SimplexOutcome) -> Result<LpSolution> {
        let n = self.dim();
        if out.status == LpStatus::Unbounded {
            // the feasible set is bounded, so this only arises from breakdown
            return Err(Error::NotConverged {
                context: Some("LP reported unbounded ray on a bounded set".into()),
            });
        }
        let z = DVector::from_fn(n, |j, _| out.x[j] - out.x[n + j]);
        let value = c.dot(&z);
        let m = self.a_eq.nrows();
        let y = out.duals.rows(0, m).into_owned();
        let gap = (self.dual_bound(c, &y) - value).max(0.0);
        Ok(LpSolution {
            primal_violation: self.primal_violation(&z),
            z: Signal::from_vector(z)?,
            value,
            status: out.status,
            duality_gap: gap,
            iterations: out.iterations,
        })
    }
}

/// Solves an [`LpProblem`] with the revised simplex method.
///
/// Returns `Err(Infeasible)` when the equality system has no solution in the
/// `l1` ball, and a solution with `status = MaxIter` (holding the current
/// vertex) when the pivot budget runs out.
pub fn solve_lp(p: &LpProblem, cfg: &SolverConfig) -> Result<LpSolution> {
    cfg.validate()?;
    let (a, b) = p.standard_form();
    let mut simplex = Simplex::new(&a, &b, cfg.max_iter)?;
    let out = simplex.maximize(&p.lifted_objective(&p.c), cfg.max_iter);
    p.finish(&p.c, out)
}

/// The polytope `{z : A z = 0, ||z||_1 <= 1}` with a reusable simplex basis,
/// for solving many linear objectives over the same constraints.
#[derive(Debug, Clone)]
pub struct KernelPolytope {
    problem: LpProblem,
    simplex: Simplex,
    max_iter: usize,
}

impl KernelPolytope {
    pub fn new(a: &DMatrix<f64>, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let n = a.ncols();
        let problem = LpProblem::new(DVector::zeros(n), a.clone(), DVector::zeros(a.nrows()), 1.0)?;
        let (sa, sb) = problem.standard_form();
        let simplex = Simplex::new(&sa, &sb, cfg.max_iter)?;
        Ok(KernelPolytope {
            problem,
            simplex,
            max_iter: cfg.max_iter,
        })
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    /// `max c'z` over the polytope, warm-started from the previous optimum.
    pub fn maximize(&mut self, c: &DVector<f64>) -> Result<LpSolution> {
        if c.len() != self.dim() {
            return Err(Error::invalid("objective length does not match polytope dimension"));
        }
        let out = self.simplex.maximize(&self.problem.lifted_objective(c), self.max_iter);
        self.problem.finish(c, out)
    }
}
