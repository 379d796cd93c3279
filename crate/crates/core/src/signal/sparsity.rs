use super::QParam;
use crate::error::{Error, Result};

/// Orders above this use log-sum-exp for the Rényi sum.
const LARGE_Q: f64 = 50.0;
/// Weights below this are dropped from the Shannon entropy (0 log 0 = 0).
const ENTROPY_FLOOR: f64 = 1e-300;

/// Extended `l_q` functional: nonzero count for `q = 0`, max magnitude for
/// `q = ∞`, `(Σ|z_i|^q)^{1/q}` otherwise. Zero entries are counted exactly.
pub fn lq_norm(z: &[f64], q: QParam) -> f64 {
    match q {
        QParam::Zero => z.iter().filter(|&&x| x != 0.0).count() as f64,
        QParam::One => z.iter().map(|x| x.abs()).sum(),
        QParam::Infinity => max_abs(z),
        QParam::Finite(p) => {
            let m = max_abs(z);
            if m == 0.0 {
                return 0.0;
            }
            let s: f64 = z.iter().map(|x| (x.abs() / m).powf(p)).sum();
            m * s.powf(1.0 / p)
        }
    }
}

fn max_abs(z: &[f64]) -> f64 {
    z.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `π(z)_i = |z_i| / ||z||_1`.
pub fn weight_distribution(z: &[f64]) -> Result<Vec<f64>> {
    let l1: f64 = z.iter().map(|x| x.abs()).sum();
    if l1 == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(z.iter().map(|x| x.abs() / l1).collect())
}

/// q-ratio sparsity level `s_q(z) = exp(H_q(π(z)))`, and 0 for `z = 0`.
///
/// For `q > 1` this is `(||z||_1 / ||z||_q)^{q/(q-1)}`; the Rényi form is
/// used for every finite order because it is bounded by construction and
/// also covers `0 < q < 1`. The result is clamped to `[1, ||z||_0]`, the
/// exact range of the measure on nonzero vectors.
pub fn q_ratio_sparsity(z: &[f64], q: QParam) -> f64 {
    let Ok(pi) = weight_distribution(z) else {
        return 0.0;
    };
    let support = pi.iter().filter(|&&p| p > 0.0).count() as f64;
    let value = match q {
        QParam::Zero => return support,
        QParam::Infinity => {
            let m = pi.iter().fold(0.0f64, |a, &p| a.max(p));
            1.0 / m
        }
        QParam::One => {
            let h: f64 = pi
                .iter()
                .filter(|&&p| p >= ENTROPY_FLOOR)
                .map(|&p| -p * p.ln())
                .sum();
            h.exp()
        }
        QParam::Finite(p) => {
            let log_sum = if p > LARGE_Q {
                let logs: Vec<f64> = pi
                    .iter()
                    .filter(|&&w| w > 0.0)
                    .map(|&w| p * w.ln())
                    .collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
            } else {
                pi.iter()
                    .filter(|&&w| w > 0.0)
                    .map(|&w| w.powf(p))
                    .sum::<f64>()
                    .ln()
            };
            (log_sum / (1.0 - p)).exp()
        }
    };
    value.clamp(1.0, support)
}

/// `σ_k(x)_1`: sum of the `N - k` smallest magnitudes.
pub fn best_k_term_error(x: &[f64], k: usize) -> Result<f64> {
    if k > x.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds signal length {}",
            x.len()
        )));
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| a.total_cmp(b));
    Ok(mags[..x.len() - k].iter().sum())
}
