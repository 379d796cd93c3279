//! CMSV values over grids of `(m, q, s)`: the `fig1_hist` histogram and the
//! three parameter sweeps.
//!
//! fig1 draws Gaussian matrices with entries of variance `1/m` and leaves the
//! columns as drawn. The sweeps draw one Bernoulli matrix with the largest
//! row count and normalize the columns of each row prefix.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qcmsv_core::cmsv::{estimate_cmsv, CmsvRequest};
use qcmsv_core::ensembles::{nested_row_prefix, EnsembleSpec};
use qcmsv_core::{Direction, MeasurementMatrix, QParam};

use super::{derive_seed, file_name, ExperimentConfig, ExperimentName, ExperimentOutput};
use crate::error::{CliError, WithContext};
use crate::output::{caveat, csv_text};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmsvRow {
    pub draw: usize,
    pub matrix_seed: u64,
    pub m: usize,
    pub n: usize,
    pub q: f64,
    pub s: f64,
    pub rho: f64,
    pub converged_trials: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub q: f64,
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

fn spec(cfg: &ExperimentConfig, m: usize, seed: u64) -> EnsembleSpec {
    match cfg.name {
        ExperimentName::Fig1Hist => EnsembleSpec::gaussian(m, cfg.n, seed),
        _ => EnsembleSpec::bernoulli(m, cfg.n, seed).normalized(),
    }
}

/// One row per `(draw, m, q, s)`, in that nesting order.
pub fn cmsv_sweep(cfg: &ExperimentConfig) -> Result<Vec<CmsvRow>, CliError> {
    cfg.validate()?;
    let m_max = *cfg.m_list.iter().max().expect("validated non-empty");
    let matrices: Vec<(u64, Vec<MeasurementMatrix>)> = (0..cfg.draws)
        .into_par_iter()
        .map(|d| {
            let seed = derive_seed(cfg.seed, d as u64);
            let prefixes = nested_row_prefix(&spec(cfg, m_max, seed), &cfg.m_list)
                .context(|| format!("{} draw {d}", cfg.name.as_str()))?;
            Ok((seed, prefixes))
        })
        .collect::<Result<_, CliError>>()?;

    let mut points = Vec::new();
    for d in 0..cfg.draws {
        for mi in 0..cfg.m_list.len() {
            for &q in &cfg.q_list {
                for &s in &cfg.s_list {
                    points.push((d, mi, q, s));
                }
            }
        }
    }
    points
        .par_iter()
        .map(|&(d, mi, q, s)| {
            let (seed, prefixes) = &matrices[d];
            let a = &prefixes[mi];
            let m = cfg.m_list[mi];
            let ctx = || format!("{} draw {d}, m = {m}, q = {q}, s = {s}", cfg.name.as_str());
            let qp = QParam::new(q).context(ctx)?;
            let est = estimate_cmsv(&CmsvRequest::new(a, qp, s).restarts(cfg.restarts).seed(*seed)).context(ctx)?;
            Ok(CmsvRow {
                draw: d,
                matrix_seed: *seed,
                m,
                n: cfg.n,
                q,
                s,
                rho: est.value,
                converged_trials: est.converged_trials,
                restarts: cfg.restarts,
            })
        })
        .collect()
}

/// Equal-width bins between the smallest and largest value of each `q`.
pub fn histogram(rows: &[CmsvRow], bins: usize) -> Vec<HistogramBin> {
    let mut qs: Vec<f64> = rows.iter().map(|r| r.q).collect();
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    let mut out = Vec::new();
    for q in qs {
        let values: Vec<f64> = rows.iter().filter(|r| r.q == q).map(|r| r.rho).collect();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for v in &values {
            let b = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
            counts[b] += 1;
        }
        for (b, count) in counts.into_iter().enumerate() {
            out.push(HistogramBin {
                q,
                bin: b,
                lower: lo + width * b as f64,
                upper: if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 },
                count,
            });
        }
    }
    out
}

fn cmsv_caveat() -> serde_json::Value {
    caveat("cmsv", Direction::UpperBound, "local-search minimum; the true CMSV is at most this value")
}

pub(super) fn fig1_output(cfg: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    let rows = cmsv_sweep(cfg)?;
    let mut results = Vec::new();
    let mut qs: Vec<f64> = cfg.q_list.clone();
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    for q in qs {
        let v: Vec<f64> = rows.iter().filter(|r| r.q == q).map(|r| r.rho).collect();
        results.push(json!({
            "q": q,
            "count": v.len(),
            "min": v.iter().cloned().fold(f64::INFINITY, f64::min),
            "mean": v.iter().sum::<f64>() / v.len() as f64,
            "max": v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }));
    }
    Ok(ExperimentOutput {
        files: vec![
            (file_name(cfg, ""), csv_text(&rows)),
            (file_name(cfg, "_bins"), csv_text(&histogram(&rows, HISTOGRAM_BINS))),
        ],
        results,
        caveats: vec![cmsv_caveat()],
    })
}

pub(super) fn sweep_output(cfg: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    let rows = cmsv_sweep(cfg)?;
    let results = rows.iter().map(|r| serde_json::to_value(r).expect("row serializes")).collect();
    Ok(ExperimentOutput {
        files: vec![(file_name(cfg, ""), csv_text(&rows))],
        results,
        caveats: vec![cmsv_caveat()],
    })
}
