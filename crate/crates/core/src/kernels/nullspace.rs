use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::signal::{MeasurementMatrix, Signal};

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of `ker A`, computed once from a full SVD.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    basis: DMatrix<f64>,
    rank: usize,
}

impl KernelBasis {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        // Pad short-fat matrices with zero rows so the SVD returns all N
        // right singular vectors.
        let square = if m < n {
            let mut p = DMatrix::zeros(n, n);
            p.rows_mut(0, m).copy_from(a);
            p
        } else {
            a.clone()
        };
        let svd = square.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let sigma = &svd.singular_values;
        let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
        let null_rows: Vec<usize> = (0..sigma.len())
            .filter(|&i| sigma[i] <= RANK_TOL * sigma_max || sigma_max == 0.0)
            .collect();
        let mut basis = DMatrix::zeros(n, null_rows.len());
        for (c, &i) in null_rows.iter().enumerate() {
            basis.set_column(c, &v_t.row(i).transpose());
        }
        KernelBasis {
            rank: n - null_rows.len(),
            basis,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `N x dim` matrix with orthonormal columns.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn project(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        if self.dim() == 0 {
            return Err(Error::TrivialKernel);
        }
        Ok(&self.basis * (self.basis.transpose() * z))
    }

    /// Gaussian vector drawn inside the kernel.
    pub fn random_vector<R: Rng>(&self, rng: &mut R) -> Result<DVector<f64>> {
        if self.dim() == 0 {
            return Err(Error::TrivialKernel);
        }
        let w = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        Ok(&self.basis * w)
    }
}

/// Orthogonal projection of `z` onto `ker A`.
pub fn project_nullspace(z: &Signal, a: &MeasurementMatrix, cache: &KernelBasis) -> Result<Signal> {
    if z.len() != a.ncols() || cache.basis().nrows() != a.ncols() {
        return Err(Error::invalid("dimension mismatch in nullspace projection"));
    }
    Signal::from_vector(cache.project(z.vector())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::rng::stream(seed, 0, 0);
        DMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn two_by_one_example() {
        let a = MeasurementMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let k = KernelBasis::new(a.matrix());
        assert_eq!(k.dim(), 1);
        let p = project_nullspace(&Signal::new(vec![1.0, 0.0]).unwrap(), &a, &k).unwrap();
        assert_relative_eq!(p.as_slice()[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.as_slice()[1], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn full_rank_square_is_trivial() {
        let a = MeasurementMatrix::new(random_matrix(4, 4, 1)).unwrap();
        let k = KernelBasis::new(a.matrix());
        assert_eq!(k.dim(), 0);
        assert_eq!(
            project_nullspace(&Signal::new(vec![1.0; 4]).unwrap(), &a, &k),
            Err(Error::TrivialKernel)
        );
    }

    #[test]
    fn rank_deficient_rows() {
        let mut a = random_matrix(3, 6, 2);
        let r0 = a.row(0).into_owned();
        a.set_row(2, &(r0 * 2.0));
        let k = KernelBasis::new(&a);
        assert_eq!(k.dim(), 4);
        assert_eq!(k.rank(), 2);
    }

    #[test]
    fn projection_is_feasible_idempotent_and_self_adjoint() {
        let mut rng = crate::rng::stream(3, 0, 1);
        for seed in 0..10 {
            let a = random_matrix(5, 9, seed);
            let norm_a = crate::kernels::spectral_norm(&a);
            let k = KernelBasis::new(&a);
            let z = DVector::from_fn(9, |_, _| rng.sample::<f64, _>(StandardNormal));
            let w = DVector::from_fn(9, |_, _| rng.sample::<f64, _>(StandardNormal));
            let pz = k.project(&z).unwrap();
            let pw = k.project(&w).unwrap();
            assert!((&a * &pz).norm() <= 1e-10 * norm_a * pz.norm());
            let ppz = k.project(&pz).unwrap();
            assert!((&ppz - &pz).norm() <= 1e-12 * pz.norm());
            assert!((pz.dot(&w) - z.dot(&pw)).abs() <= 1e-10 * z.norm() * w.norm());
            let in_kernel = k.random_vector(&mut rng).unwrap();
            assert!((k.project(&in_kernel).unwrap() - &in_kernel).norm() <= 1e-12 * in_kernel.norm());
        }
    }
}
