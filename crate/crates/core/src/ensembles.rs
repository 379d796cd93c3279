//! Seeded random measurement matrices.
//!
//! Entries are drawn in row-major order from a ChaCha8 stream (see
//! [`crate::rng`]), so a matrix with fewer rows from the same seed is exactly
//! a row prefix of a taller one. Gaussian variates use the ziggurat sampler
//! of `rand_distr`, which is platform independent.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{purpose, stream};
use crate::signal::{EnsembleTag, MeasurementMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleKind {
    /// I.i.d. standard normal entries times `scale` (default `1/sqrt(m)`).
    Gaussian { scale: Option<f64> },
    /// I.i.d. `±scale` entries (default `1/sqrt(m)`).
    Bernoulli { scale: Option<f64> },
    /// First `m` rows of a row-permuted Sylvester Hadamard matrix of order
    /// `N`, columns normalized.
    HadamardSub { row_permutation_seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub normalize_columns: bool,
}

impl EnsembleSpec {
    pub fn gaussian(m: usize, n: usize, seed: u64) -> Self {
        EnsembleSpec {
            kind: EnsembleKind::Gaussian { scale: None },
            m,
            n,
            seed,
            normalize_columns: false,
        }
    }

    pub fn bernoulli(m: usize, n: usize, seed: u64) -> Self {
        EnsembleSpec {
            kind: EnsembleKind::Bernoulli { scale: None },
            m,
            n,
            seed,
            normalize_columns: false,
        }
    }

    pub fn hadamard_sub(m: usize, n: usize, seed: u64) -> Self {
        EnsembleSpec {
            kind: EnsembleKind::HadamardSub {
                row_permutation_seed: seed,
            },
            m,
            n,
            seed,
            normalize_columns: true,
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize_columns = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::invalid("ensemble dimensions must be positive"));
        }
        match self.kind {
            EnsembleKind::Gaussian { scale } | EnsembleKind::Bernoulli { scale } => {
                if let Some(s) = scale {
                    if !(s.is_finite() && s > 0.0) {
                        return Err(Error::invalid("ensemble scale must be positive"));
                    }
                }
            }
            EnsembleKind::HadamardSub { .. } => {
                if !self.n.is_power_of_two() {
                    return Err(Error::invalid(format!(
                        "Hadamard order {} is not a power of two",
                        self.n
                    )));
                }
                if self.m > self.n {
                    return Err(Error::invalid("Hadamard submatrix needs m <= N"));
                }
            }
        }
        Ok(())
    }

    fn default_scale(&self) -> f64 {
        1.0 / (self.m as f64).sqrt()
    }
}

/// Sylvester construction `H_{2n} = [[H, H], [H, -H]]`, `n` a power of two.
pub fn sylvester_hadamard(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("Hadamard order {n} is not a power of two")));
    }
    // entry (i, j) is (-1)^popcount(i & j)
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }))
}

pub fn generate(spec: &EnsembleSpec) -> Result<MeasurementMatrix> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let (entries, tag) = match spec.kind {
        EnsembleKind::Gaussian { scale } => {
            let scale = scale.unwrap_or_else(|| spec.default_scale());
            let mut rng = stream(spec.seed, purpose::ENSEMBLE_ENTRIES, 0);
            let data: Vec<f64> = (0..m * n)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            (DMatrix::from_row_slice(m, n, &data), EnsembleTag::Gaussian)
        }
        EnsembleKind::Bernoulli { scale } => {
            let scale = scale.unwrap_or_else(|| spec.default_scale());
            let mut rng = stream(spec.seed, purpose::ENSEMBLE_ENTRIES, 0);
            let data: Vec<f64> = (0..m * n)
                .map(|_| if rng.random::<bool>() { scale } else { -scale })
                .collect();
            (DMatrix::from_row_slice(m, n, &data), EnsembleTag::Bernoulli)
        }
        EnsembleKind::HadamardSub {
            row_permutation_seed,
        } => {
            let h = sylvester_hadamard(n)?;
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(&mut stream(row_permutation_seed, purpose::HADAMARD_ROWS, 0));
            let sub = h.select_rows(rows[..m].iter());
            let a = MeasurementMatrix::with_tag(sub, EnsembleTag::HadamardSub)?;
            (a.normalized_columns().matrix().clone(), EnsembleTag::HadamardSub)
        }
    };
    let a = MeasurementMatrix::with_tag(entries, tag)?;
    Ok(if spec.normalize_columns {
        a.normalized_columns()
    } else {
        a
    })
}

/// Row prefixes of one draw. Entries come off a single row-major stream, so
/// the prefix with `m` rows is exactly the draw of the same spec with `m`
/// rows, including its default `1/sqrt(m)` scale and per-prefix column
/// normalization.
pub fn nested_row_prefix(spec: &EnsembleSpec, m_list: &[usize]) -> Result<Vec<MeasurementMatrix>> {
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("row counts must be strictly increasing"));
    }
    if m_list.last().is_some_and(|&m| m > spec.m) {
        return Err(Error::invalid("row prefix larger than the generated matrix"));
    }
    m_list.iter().map(|&m| generate(&EnsembleSpec { m, ..*spec })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::COLUMN_NORM_TOL;

    #[test]
    fn sylvester_identity() {
        assert_eq!(sylvester_hadamard(2).unwrap(), nalgebra::dmatrix![1.0, 1.0; 1.0, -1.0]);
        for n in [1, 4, 16, 64] {
            let h = sylvester_hadamard(n).unwrap();
            assert_eq!(h.transpose() * &h, DMatrix::identity(n, n) * n as f64);
        }
        assert!(sylvester_hadamard(12).is_err());
    }

    #[test]
    fn bernoulli_entries_are_exact() {
        let a = generate(&EnsembleSpec::bernoulli(9, 13, 4)).unwrap();
        let v = 1.0 / 3.0;
        assert!(a.matrix().iter().all(|&x| x == v || x == -v));
        assert_eq!(a.ensemble(), EnsembleTag::Bernoulli);
    }

    #[test]
    fn gaussian_column_norms_concentrate() {
        let mut total = 0.0;
        for seed in 0..100 {
            let a = generate(&EnsembleSpec::gaussian(40, 60, seed)).unwrap();
            total += a.column_norms().iter().sum::<f64>() / 60.0;
        }
        let mean = total / 100.0;
        assert!((mean - 1.0).abs() < 0.1, "mean column norm {mean}");
    }

    #[test]
    fn hadamard_submatrix() {
        let a = generate(&EnsembleSpec::hadamard_sub(16, 64, 3)).unwrap();
        assert!(a.columns_normalized());
        let v = 0.25;
        assert!(a.matrix().iter().all(|&x| x == v || x == -v));
        // rows are distinct rows of H_64, hence mutually orthogonal
        let g = a.matrix() * a.matrix().transpose();
        for i in 0..16 {
            for j in 0..16 {
                let want = if i == j { 4.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-12);
            }
        }
        assert!(generate(&EnsembleSpec::hadamard_sub(10, 48, 0)).is_err());
        assert!(generate(&EnsembleSpec::hadamard_sub(65, 64, 0)).is_err());
    }

    #[test]
    fn determinism_and_prefix_consistency() {
        let spec = EnsembleSpec::gaussian(40, 30, 11);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let tall = generate(&EnsembleSpec::bernoulli(40, 30, 5)).unwrap();
        let prefixes = nested_row_prefix(&EnsembleSpec::bernoulli(40, 30, 5), &[20, 40]).unwrap();
        let head = tall.matrix().rows(0, 20);
        assert_eq!(prefixes[0].matrix().map(f64::signum), head.map(f64::signum));
        assert!(prefixes[0].matrix().iter().all(|v| v.abs() == 1.0 / 20f64.sqrt()));
        assert_eq!(prefixes[1], tall);

        let normalized = nested_row_prefix(&EnsembleSpec::bernoulli(40, 30, 5).normalized(), &[20, 32]).unwrap();
        for a in &normalized {
            for n in a.column_norms() {
                assert!((n - 1.0).abs() <= COLUMN_NORM_TOL);
            }
        }
        assert!(nested_row_prefix(&spec, &[20, 10]).is_err());
        assert!(nested_row_prefix(&spec, &[50]).is_err());
    }
}
