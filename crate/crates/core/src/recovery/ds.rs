//! Dantzig selector as a linear program.
//!
//! With `x = u - v`, `G = A'A`, `c = A'y` and slacks `s1, s2 >= 0`:
//!
//! ```text
//! maximize  -1'(u + v)
//!    G u - G v + s1 = c + lambda
//!   -G u + G v + s2 = lambda - c
//! ```

use nalgebra::{DMatrix, DVector};

use super::{check_dims, check_param, RecoveryResult};
use crate::error::{Error, Result};
use crate::kernels::{LpStatus, SolverConfig, StandardLp};
use crate::signal::{MeasurementMatrix, Signal};

/// Dantzig selector with `lambda = lambda_N sigma`.
pub fn solve_ds(a: &MeasurementMatrix, y: &Signal, lambda: f64, cfg: &SolverConfig) -> Result<RecoveryResult> {
    check_dims(a, y)?;
    check_param("lambda", lambda)?;
    cfg.validate()?;
    let m = a.matrix();
    let n = m.ncols();
    let gram = m.tr_mul(m);
    let c = m.tr_mul(y.vector());

    let mut lhs = DMatrix::zeros(2 * n, 4 * n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&gram);
    lhs.view_mut((0, n), (n, n)).copy_from(&(-&gram));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(-&gram));
    lhs.view_mut((n, n), (n, n)).copy_from(&gram);
    lhs.view_mut((0, 2 * n), (2 * n, 2 * n)).fill_with_identity();
    let rhs = DVector::from_fn(2 * n, |i, _| if i < n { c[i] + lambda } else { lambda - c[i - n] });
    let cost = DVector::from_fn(4 * n, |i, _| if i < 2 * n { -1.0 } else { 0.0 });

    let lp = StandardLp { a: lhs, b: rhs, c: cost };
    let out = lp.solve(cfg.max_iter)?;
    match out.status {
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => {
            return Err(Error::NotConverged {
                context: Some("Dantzig selector LP reported unbounded".into()),
            })
        }
        _ => {}
    }
    let x = DVector::from_fn(n, |i, _| out.x[i] - out.x[n + i]);
    let violation = (&c - &gram * &x).amax() - lambda;
    let objective = x.lp_norm(1);
    Ok(RecoveryResult {
        x_hat: Signal::from_vector(x)?,
        iterations: out.iterations,
        primal_residuals: vec![violation.max(0.0)],
        converged: out.status == LpStatus::Optimal,
        objective,
    })
}
