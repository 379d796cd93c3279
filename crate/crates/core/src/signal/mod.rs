//! Vectors, measurement matrices and the q-ratio sparsity measure.

mod io;
mod sparsity;

pub use io::{read_matrix_csv, read_vector_csv, write_matrix_csv, write_vector_csv};
pub use sparsity::{best_k_term_error, lq_norm, q_ratio_sparsity, weight_distribution};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-norm tolerance behind [`MeasurementMatrix::columns_normalized`].
pub const COLUMN_NORM_TOL: f64 = 1e-10;

/// A finite, non-empty real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(DVector<f64>);

impl Serialize for Signal {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter())
    }
}

impl<'de> Deserialize<'de> for Signal {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<f64>::deserialize(deserializer)?;
        Signal::new(entries).map_err(serde::de::Error::custom)
    }
}

impl Signal {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(entries))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("signal must have at least one entry"));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("signal entry {i} is not finite")));
        }
        Ok(Signal(v))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "signal length must be positive");
        Signal(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self, q: QParam) -> f64 {
        lq_norm(self.as_slice(), q)
    }

    pub fn sparsity(&self, q: QParam) -> f64 {
        q_ratio_sparsity(self.as_slice(), q)
    }
}

/// Extended sparsity order `q` in `{0} ∪ (0,1) ∪ {1} ∪ (1,∞) ∪ {∞}`.
///
/// The orders 0, 1 and ∞ are limits of the finite-order formula and get their
/// own variants so the removable singularities are never evaluated directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub enum QParam {
    Zero,
    Finite(f64),
    One,
    Infinity,
}

impl QParam {
    /// Maps `0`, `1` and `+inf` onto their limit variants.
    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q < 0.0 {
            return Err(Error::invalid(format!("q must be non-negative, got {q}")));
        }
        Ok(if q == 0.0 {
            QParam::Zero
        } else if q == 1.0 {
            QParam::One
        } else if q == f64::INFINITY {
            QParam::Infinity
        } else {
            QParam::Finite(q)
        })
    }

    /// Numeric value, with `Infinity` mapped to `f64::INFINITY`. Ordering of
    /// these values matches the extended order `Zero < ... < Infinity`.
    pub fn value(self) -> f64 {
        match self {
            QParam::Zero => 0.0,
            QParam::Finite(q) => q,
            QParam::One => 1.0,
            QParam::Infinity => f64::INFINITY,
        }
    }

    /// True for the orders used by the recovery theory, `1 < q <= ∞`.
    pub fn is_super_linear(self) -> bool {
        match self {
            QParam::Finite(q) => q > 1.0,
            QParam::Infinity => true,
            _ => false,
        }
    }

    /// `Err(InvalidQ)` unless `1 < q <= ∞`.
    pub fn require_super_linear(self) -> Result<Self> {
        if self.is_super_linear() {
            Ok(self)
        } else {
            Err(Error::InvalidQ(self.value()))
        }
    }

    /// Conjugate-type exponent `q / (q - 1)`; `1` for `q = ∞`.
    pub fn sparsity_exponent(self) -> f64 {
        match self {
            QParam::Infinity => 1.0,
            q => {
                let q = q.value();
                q / (q - 1.0)
            }
        }
    }

    /// `(q - 1) / q`; `1` for `q = ∞`.
    pub fn radius_exponent(self) -> f64 {
        1.0 / self.sparsity_exponent()
    }
}

impl From<QParam> for f64 {
    fn from(q: QParam) -> f64 {
        q.value()
    }
}

impl TryFrom<f64> for QParam {
    type Error = Error;
    fn try_from(q: f64) -> Result<Self> {
        QParam::new(q)
    }
}

impl std::fmt::Display for QParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QParam::Infinity => write!(f, "inf"),
            q => write!(f, "{}", q.value()),
        }
    }
}

impl std::str::FromStr for QParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if matches!(t.as_str(), "inf" | "infinity" | "∞") {
            return Ok(QParam::Infinity);
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::Parse(format!("cannot parse q from {s:?}")))?;
        QParam::new(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleTag {
    Gaussian,
    Bernoulli,
    HadamardSub,
    Custom,
}

/// Dense `m x N` measurement matrix with provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    entries: DMatrix<f64>,
    ensemble: EnsembleTag,
    columns_normalized: bool,
}

impl MeasurementMatrix {
    /// Wraps a matrix as [`EnsembleTag::Custom`]. `columns_normalized` is
    /// detected from the data.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tag(entries, EnsembleTag::Custom)
    }

    pub fn with_tag(entries: DMatrix<f64>, ensemble: EnsembleTag) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::invalid("measurement matrix must be at least 1x1"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("measurement matrix has non-finite entries"));
        }
        let columns_normalized = entries
            .column_iter()
            .all(|c| (c.norm() - 1.0).abs() <= COLUMN_NORM_TOL);
        Ok(MeasurementMatrix {
            entries,
            ensemble,
            columns_normalized,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Self::new(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn ensemble(&self) -> EnsembleTag {
        self.ensemble
    }

    pub fn columns_normalized(&self) -> bool {
        self.columns_normalized
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.entries.column_iter().map(|c| c.norm()).collect()
    }

    /// Returns a copy with unit Euclidean columns. Zero columns are left alone.
    pub fn normalized_columns(&self) -> Self {
        let mut a = self.entries.clone();
        for mut col in a.column_iter_mut() {
            let n = col.norm();
            if n > 0.0 {
                col /= n;
            }
        }
        let columns_normalized = a
            .column_iter()
            .all(|c| (c.norm() - 1.0).abs() <= COLUMN_NORM_TOL);
        MeasurementMatrix {
            entries: a,
            ensemble: self.ensemble,
            columns_normalized,
        }
    }

    /// First `m` rows, keeping the ensemble tag. Column normalization is not
    /// re-applied.
    pub fn row_prefix(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.nrows() {
            return Err(Error::invalid(format!(
                "row prefix {m} outside 1..={}",
                self.nrows()
            )));
        }
        Self::with_tag(self.entries.rows(0, m).into_owned(), self.ensemble)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        MeasurementMatrix {
            entries: &self.entries * alpha,
            ensemble: self.ensemble,
            columns_normalized: self.columns_normalized && alpha.abs() == 1.0,
        }
    }

    pub fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.entries * z
    }
}
