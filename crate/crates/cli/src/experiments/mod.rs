//! Desk-scale reproductions of the numerical experiments.
//!
//! Each experiment expands its configuration into independent points, runs
//! them on the rayon pool and collects the rows in point order, so the
//! output files depend only on the configuration and the seed. Matrix `d` of
//! a run is drawn with the seed `derive_seed(seed, d)`.

mod cmsv_sweeps;
mod fig5;
mod kmax_tables;

use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qcmsv_core::rng::{purpose, stream};

use crate::error::CliError;
use crate::output::{self, OutputFile, WrittenFiles};

pub use cmsv_sweeps::{cmsv_sweep, histogram, CmsvRow, HistogramBin};
pub use fig5::{fig5_bounds, BoundRow, RHO_FLOOR};
pub use kmax_tables::{kmax_table, medians, KmaxRow, MedianRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    #[value(name = "fig1_hist")]
    Fig1Hist,
    #[value(name = "table1")]
    Table1,
    #[value(name = "table2")]
    Table2,
    #[value(name = "fig2_cmsv_vs_s")]
    Fig2CmsvVsS,
    #[value(name = "fig3_cmsv_vs_m")]
    Fig3CmsvVsM,
    #[value(name = "fig4_cmsv_vs_q")]
    Fig4CmsvVsQ,
    #[value(name = "fig5_bounds")]
    Fig5Bounds,
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Fig1Hist => "fig1_hist",
            ExperimentName::Table1 => "table1",
            ExperimentName::Table2 => "table2",
            ExperimentName::Fig2CmsvVsS => "fig2_cmsv_vs_s",
            ExperimentName::Fig3CmsvVsM => "fig3_cmsv_vs_m",
            ExperimentName::Fig4CmsvVsQ => "fig4_cmsv_vs_q",
            ExperimentName::Fig5Bounds => "fig5_bounds",
        }
    }
}

/// Row counts of the full N = 256 table.
pub const TABLE2_FULL_M: [usize; 9] = [25, 51, 76, 102, 128, 153, 179, 204, 230];
pub const TABLE2_DESK_M: [usize; 3] = [51, 128, 204];
/// CCP orders of both sparsity tables; the `L_inf` column is always added.
pub const TABLE_CCP_Q: [f64; 4] = [1.8, 2.0, 3.0, 20.0];

/// A fully resolved experiment configuration. Fields an experiment does not
/// use keep their defaults and are left out of its manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    pub seed: u64,
    pub draws: usize,
    pub restarts: usize,
    pub n: usize,
    /// Row counts. Empty for fig5 means `10k..=N` for each `k`.
    pub m_list: Vec<usize>,
    pub q_list: Vec<f64>,
    pub s_list: Vec<f64>,
    pub k_list: Vec<usize>,
    pub ric_samples: usize,
    pub eps: f64,
}

/// Optional replacements for the defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub draws: Option<usize>,
    pub restarts: Option<usize>,
    pub n: Option<usize>,
    pub m_list: Option<Vec<usize>>,
    pub q_list: Option<Vec<f64>>,
    pub s_list: Option<Vec<f64>>,
    pub k_list: Option<Vec<usize>>,
    pub ric_samples: Option<usize>,
    pub eps: Option<f64>,
    pub full_grid: bool,
}

impl ExperimentConfig {
    pub fn defaults(name: ExperimentName, seed: u64) -> Self {
        let base = ExperimentConfig {
            name,
            seed,
            draws: 1,
            restarts: qcmsv_core::cmsv::DEFAULT_RESTARTS,
            n: 60,
            m_list: vec![20, 30, 40],
            q_list: vec![1.8, 2.0, 3.0],
            s_list: vec![],
            k_list: vec![],
            ric_samples: qcmsv_core::ric::DEFAULT_RIC_SAMPLES,
            eps: 1.0,
        };
        match name {
            ExperimentName::Fig1Hist => ExperimentConfig { draws: 100, m_list: vec![40], s_list: vec![4.0], ..base },
            ExperimentName::Table1 => ExperimentConfig {
                draws: 20,
                n: 40,
                m_list: vec![20, 24, 28, 32],
                q_list: TABLE_CCP_Q.to_vec(),
                ..base
            },
            ExperimentName::Table2 => ExperimentConfig {
                draws: 5,
                n: 256,
                m_list: TABLE2_DESK_M.to_vec(),
                q_list: TABLE_CCP_Q.to_vec(),
                ..base
            },
            ExperimentName::Fig2CmsvVsS => ExperimentConfig { s_list: (1..=10).map(f64::from).collect(), ..base },
            ExperimentName::Fig3CmsvVsM => ExperimentConfig {
                m_list: (20..=40).step_by(2).collect(),
                s_list: vec![4.0, 6.0, 8.0],
                ..base
            },
            ExperimentName::Fig4CmsvVsQ => ExperimentConfig {
                q_list: vec![1.2, 1.5, 1.8, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0],
                s_list: vec![2.0, 4.0, 8.0],
                ..base
            },
            ExperimentName::Fig5Bounds => ExperimentConfig {
                n: 64,
                m_list: vec![],
                q_list: vec![1.8],
                k_list: vec![1, 2, 4],
                ..base
            },
        }
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self, CliError> {
        if o.full_grid {
            if self.name != ExperimentName::Table2 {
                return Err(CliError::Usage("--full-grid applies to table2 only".into()));
            }
            self.m_list = TABLE2_FULL_M.to_vec();
        }
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = &o.$f { self.$f = v.clone(); } )* };
        }
        apply!(draws, restarts, n, m_list, q_list, s_list, k_list, ric_samples, eps);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if !(1..=10_000).contains(&self.draws) {
            return bad(format!("draws must lie in [1, 10000], got {}", self.draws));
        }
        if !(1..=1000).contains(&self.restarts) {
            return bad(format!("restarts must lie in [1, 1000], got {}", self.restarts));
        }
        if !(1..=4096).contains(&self.n) {
            return bad(format!("N must lie in [1, 4096], got {}", self.n));
        }
        if let Some(&m) = self.m_list.iter().find(|&&m| m == 0 || m > self.n) {
            return bad(format!("row count {m} outside [1, {}]", self.n));
        }
        if self.name != ExperimentName::Fig5Bounds && self.m_list.is_empty() {
            return bad("m list is empty".into());
        }
        if let Some(&q) = self.q_list.iter().find(|&&q| !(q > 1.0)) {
            return bad(format!("every q must exceed 1, got {q}"));
        }
        if self.q_list.is_empty() && !matches!(self.name, ExperimentName::Table1 | ExperimentName::Table2) {
            return bad("q list is empty".into());
        }
        if let Some(&s) = self.s_list.iter().find(|&&s| !(s >= 1.0 && s <= self.n as f64)) {
            return bad(format!("s = {s} outside [1, {}]", self.n));
        }
        if !(1..=1_000_000).contains(&self.ric_samples) {
            return bad(format!("ric samples must lie in [1, 1e6], got {}", self.ric_samples));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be finite and nonnegative, got {}", self.eps));
        }
        match self.name {
            ExperimentName::Table1 | ExperimentName::Table2 => {
                let mut sorted = self.m_list.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted != self.m_list {
                    return bad("table row counts must be strictly increasing".into());
                }
            }
            ExperimentName::Fig5Bounds => {
                if self.q_list.len() != 1 || self.q_list[0] > 2.0 {
                    return bad("fig5 takes a single q in (1, 2]".into());
                }
                if self.k_list.is_empty() || self.k_list.iter().any(|&k| k == 0 || 2 * k > self.n) {
                    return bad(format!("every k must satisfy 1 <= 2k <= {}", self.n));
                }
                if !self.n.is_power_of_two() {
                    return bad(format!("Hadamard N must be a power of two, got {}", self.n));
                }
            }
            _ => {
                if self.s_list.is_empty() {
                    return bad("s list is empty".into());
                }
                let mut sorted = self.m_list.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted != self.m_list {
                    return bad("row counts must be strictly increasing".into());
                }
            }
        }
        Ok(())
    }

    /// The configuration as recorded in the manifest.
    pub fn manifest_config(&self) -> Value {
        let mut v = json!({
            "experiment": self.name,
            "seed": self.seed,
            "draws": self.draws,
            "n": self.n,
            "m_list": self.m_list,
        });
        let obj = v.as_object_mut().expect("object literal");
        match self.name {
            ExperimentName::Table1 | ExperimentName::Table2 => {
                obj.insert("ccp_q_list".into(), json!(self.q_list));
            }
            ExperimentName::Fig5Bounds => {
                obj.insert("q".into(), json!(self.q_list[0]));
                obj.insert("k_list".into(), json!(self.k_list));
                obj.insert("restarts".into(), json!(self.restarts));
                obj.insert("ric_samples".into(), json!(self.ric_samples));
                obj.insert("eps".into(), json!(self.eps));
            }
            _ => {
                obj.insert("q_list".into(), json!(self.q_list));
                obj.insert("s_list".into(), json!(self.s_list));
                obj.insert("restarts".into(), json!(self.restarts));
            }
        }
        v
    }
}

/// Seed of matrix `index` in a run with seed `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    stream(seed, purpose::EXPERIMENT, index).random()
}

/// Data files, manifest summary and caveats of one run, before writing.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub files: Vec<(String, String)>,
    pub results: Vec<Value>,
    pub caveats: Vec<Value>,
}

pub fn compute(cfg: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    cfg.validate()?;
    match cfg.name {
        ExperimentName::Fig1Hist => cmsv_sweeps::fig1_output(cfg),
        ExperimentName::Fig2CmsvVsS | ExperimentName::Fig3CmsvVsM | ExperimentName::Fig4CmsvVsQ => {
            cmsv_sweeps::sweep_output(cfg)
        }
        ExperimentName::Table1 | ExperimentName::Table2 => kmax_tables::table_output(cfg),
        ExperimentName::Fig5Bounds => fig5::fig5_output(cfg),
    }
}

/// Runs the experiment and writes its data files, the manifest
/// `<name>.manifest.json` and the wall-clock record `<name>.timing.json`
/// into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<WrittenFiles, CliError> {
    output::ensure_dir(out_dir)?;
    let start = Instant::now();
    let out = compute(cfg)?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut data = Vec::new();
    let mut listed = Vec::new();
    for (name, contents) in &out.files {
        let path = out_dir.join(name);
        output::write_file(&path, contents)?;
        listed.push(OutputFile { file: name.clone(), sha256: output::sha256_hex(contents.as_bytes()) });
        data.push(path);
    }
    let name = cfg.name.as_str();
    let manifest = json!({
        "config": cfg.manifest_config(),
        "results": out.results,
        "caveats": out.caveats,
        "outputs": listed,
        "library_version": env!("CARGO_PKG_VERSION"),
    });
    let manifest_path = out_dir.join(format!("{name}.manifest.json"));
    output::write_file(&manifest_path, &output::to_json(&manifest))?;
    let timing_path = out_dir.join(format!("{name}.timing.json"));
    let timing = json!({ "experiment": name, "wall_clock_seconds": elapsed });
    output::write_file(&timing_path, &output::to_json(&timing))?;
    Ok(WrittenFiles { data, manifest: manifest_path, timing: timing_path })
}

pub(crate) fn file_name(cfg: &ExperimentConfig, suffix: &str) -> String {
    format!("{}{suffix}.csv", cfg.name.as_str())
}
