//! Closed-form solves on a fixed support with fixed signs.
//!
//! Once an iterative solver has found the support `S` and signs `sigma` of
//! the solution, BP and Lasso reduce to small linear-algebra problems on the
//! columns `A_S`. The candidates built here are only accepted by the callers
//! after their own feasibility and objective checks.

use nalgebra::{DMatrix, DVector};

/// Entries above `rel * max|z|`.
pub(super) fn support_of(z: &DVector<f64>, rel: f64) -> Vec<usize> {
    let cut = rel * z.amax();
    (0..z.len()).filter(|&i| z[i] != 0.0 && z[i].abs() > cut).collect()
}

pub(super) struct Restricted {
    support: Vec<usize>,
    signs: DVector<f64>,
    a_s: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Restricted {
    /// `None` unless `A_S` has full column rank (numerically).
    pub fn new(a: &DMatrix<f64>, z: &DVector<f64>, support: Vec<usize>) -> Option<Self> {
        if support.is_empty() || support.len() > a.nrows() {
            return None;
        }
        let a_s = a.select_columns(&support);
        let gram = a_s.tr_mul(&a_s);
        let (lo, hi) = {
            let eig = gram.symmetric_eigenvalues();
            (eig.min(), eig.max())
        };
        if !(lo > 1e-12 * hi) {
            return None;
        }
        let chol = gram.cholesky()?;
        let signs = DVector::from_iterator(support.len(), support.iter().map(|&i| z[i].signum()));
        Some(Restricted { support, signs, a_s, chol })
    }

    fn embed(&self, xs: &DVector<f64>, n: usize) -> Option<DVector<f64>> {
        let mut x = DVector::zeros(n);
        for (k, &i) in self.support.iter().enumerate() {
            if xs[k] * self.signs[k] <= 0.0 {
                return None;
            }
            x[i] = xs[k];
        }
        Some(x)
    }

    /// Minimiser of `sigma'x_S` over `||y - A_S x_S||_2 <= eps`, kept only if
    /// its signs agree with `sigma`.
    pub fn bp(&self, y: &DVector<f64>, eps: f64, n: usize) -> Option<DVector<f64>> {
        let x_ls = self.chol.solve(&self.a_s.tr_mul(y));
        let r_ls = y - &self.a_s * &x_ls;
        // rounding in r_ls is left to the caller's feasibility check
        if r_ls.norm() > eps + 1e-9 * (1.0 + y.norm()) {
            return None;
        }
        let slack = (eps * eps - r_ls.norm_squared()).max(0.0);
        let d = self.chol.solve(&self.signs);
        let t = (slack / self.signs.dot(&d)).sqrt();
        self.embed(&(x_ls - d * t), n)
    }

    /// Stationary point of the Lasso on the support, `G_S x_S = A_S'y - lambda sigma`.
    pub fn lasso(&self, y: &DVector<f64>, lambda: f64, n: usize) -> Option<DVector<f64>> {
        let rhs = self.a_s.tr_mul(y) - &self.signs * lambda;
        self.embed(&self.chol.solve(&rhs), n)
    }
}
