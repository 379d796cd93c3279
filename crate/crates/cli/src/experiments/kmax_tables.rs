//! Maximal certified sparsity levels: `table1` (Bernoulli, N = 40) and
//! `table2` (Gaussian, N = 256).
//!
//! The matrices of one draw are row prefixes of a single matrix with the
//! largest row count. Columns are not normalized; with equal column norms the
//! kernel, and hence `k_max`, would not change anyway.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qcmsv_core::ensembles::{nested_row_prefix, EnsembleSpec};
use qcmsv_core::kernels::SolverConfig;
use qcmsv_core::nsp::{ccp_verify, verify_linf, Certificate};
use qcmsv_core::{Direction, MeasurementMatrix, QParam};

use super::{derive_seed, file_name, ExperimentConfig, ExperimentName, ExperimentOutput};
use crate::error::{CliError, WithContext};
use crate::output::{caveat, csv_text};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmaxRow {
    pub draw: usize,
    pub matrix_seed: u64,
    pub m: usize,
    pub n: usize,
    pub method: String,
    /// Empty for the `L_inf` method.
    pub q: Option<f64>,
    pub opt_value: f64,
    pub bound: f64,
    pub k_max: usize,
    pub certificate: Certificate,
}

/// Median `k_max` per method at one row count; columns follow
/// [`method_labels`].
#[derive(Debug, Clone, PartialEq)]
pub struct MedianRow {
    pub m: usize,
    pub medians: Vec<f64>,
}

fn method_label(q: Option<f64>) -> String {
    match q {
        None => "linf".into(),
        Some(q) => format!("ccp{q}"),
    }
}

pub fn method_labels(cfg: &ExperimentConfig) -> Vec<String> {
    std::iter::once(None).chain(cfg.q_list.iter().map(|&q| Some(q))).map(method_label).collect()
}

fn spec(cfg: &ExperimentConfig, m: usize, seed: u64) -> EnsembleSpec {
    match cfg.name {
        ExperimentName::Table2 => EnsembleSpec::gaussian(m, cfg.n, seed),
        _ => EnsembleSpec::bernoulli(m, cfg.n, seed),
    }
}

/// One row per `(draw, m, method)`, methods in the order `linf`, then the
/// CCP orders of `q_list`.
pub fn kmax_table(cfg: &ExperimentConfig) -> Result<Vec<KmaxRow>, CliError> {
    cfg.validate()?;
    let m_max = *cfg.m_list.last().expect("validated non-empty");
    let matrices: Vec<(u64, Vec<MeasurementMatrix>)> = (0..cfg.draws)
        .into_par_iter()
        .map(|d| {
            let seed = derive_seed(cfg.seed, d as u64);
            let prefixes = nested_row_prefix(&spec(cfg, m_max, seed), &cfg.m_list)
                .context(|| format!("{} draw {d}", cfg.name.as_str()))?;
            Ok((seed, prefixes))
        })
        .collect::<Result<_, CliError>>()?;

    let methods: Vec<Option<f64>> = std::iter::once(None).chain(cfg.q_list.iter().map(|&q| Some(q))).collect();
    let mut points = Vec::new();
    for d in 0..cfg.draws {
        for mi in 0..cfg.m_list.len() {
            for &method in &methods {
                points.push((d, mi, method));
            }
        }
    }
    points
        .par_iter()
        .map(|&(d, mi, method)| {
            let (seed, prefixes) = &matrices[d];
            let m = cfg.m_list[mi];
            let ctx = || format!("{} draw {d}, m = {m}, method {}", cfg.name.as_str(), method_label(method));
            let solver = SolverConfig::default().with_seed(*seed);
            let res = match method {
                None => verify_linf(&prefixes[mi], &solver),
                Some(q) => QParam::new(q).and_then(|q| ccp_verify(&prefixes[mi], q, None, &solver)),
            }
            .context(ctx)?;
            Ok(KmaxRow {
                draw: d,
                matrix_seed: *seed,
                m,
                n: cfg.n,
                method: if method.is_some() { "ccp" } else { "linf" }.into(),
                q: method,
                opt_value: res.opt_value,
                bound: res.bound,
                k_max: res.k_max,
                certificate: res.certificate,
            })
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median over draws, averaging the middle pair for an even count.
pub fn medians(cfg: &ExperimentConfig, rows: &[KmaxRow]) -> Vec<MedianRow> {
    let methods: Vec<Option<f64>> = std::iter::once(None).chain(cfg.q_list.iter().map(|&q| Some(q))).collect();
    cfg.m_list
        .iter()
        .map(|&m| MedianRow {
            m,
            medians: methods
                .iter()
                .map(|&method| {
                    median(rows.iter().filter(|r| r.m == m && r.q == method).map(|r| r.k_max as f64).collect())
                })
                .collect(),
        })
        .collect()
}

fn medians_csv(cfg: &ExperimentConfig, rows: &[MedianRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("m".to_string()).chain(method_labels(cfg)).collect();
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let rec: Vec<String> = std::iter::once(r.m.to_string()).chain(r.medians.iter().map(|v| v.to_string())).collect();
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV output is UTF-8")
}

pub(super) fn table_output(cfg: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    let rows = kmax_table(cfg)?;
    let med = medians(cfg, &rows);
    let labels = method_labels(cfg);
    let results = med
        .iter()
        .map(|r| {
            let cols: serde_json::Map<String, serde_json::Value> =
                labels.iter().cloned().zip(r.medians.iter().map(|&v| json!(v))).collect();
            json!({ "m": r.m, "median_k_max": cols })
        })
        .collect();
    let mut caveats = Vec::new();
    if !cfg.q_list.is_empty() {
        caveats.push(caveat(
            "ccp",
            Direction::UpperBound,
            "convex-concave procedure reaches a local maximum, so its k_max may exceed the certified level",
        ));
    }
    Ok(ExperimentOutput {
        files: vec![(file_name(cfg, ""), csv_text(&rows)), (file_name(cfg, "_medians"), medians_csv(cfg, &med))],
        results,
        caveats,
    })
}
