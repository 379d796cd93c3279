use nalgebra::DMatrix;

/// Largest and smallest singular values of `m`, taking the smallest over the
/// `min(rows, cols)` values a thin decomposition produces.
pub fn extreme_singular_values(m: &DMatrix<f64>) -> (f64, f64) {
    assert!(m.nrows() > 0 && m.ncols() > 0, "matrix must be nonempty");
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (max, min)
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    extreme_singular_values(m).0
}
