use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::experiments::ExperimentName;

#[derive(Debug, Parser)]
#[command(name = "qcmsv", version, about = "q-ratio sparsity, CMSV estimation and sparse recovery")]
pub struct Cli {
    /// Seed for every random quantity.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Print machine-readable JSON instead of plain text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Maximum number of worker threads.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..=1024))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random measurement matrix and write it as CSV.
    GenMatrix(GenMatrixArgs),
    /// q-ratio sparsity of a vector.
    Sparsity(SparsityArgs),
    /// Estimate the q-ratio CMSV of a matrix.
    Cmsv(CmsvArgs),
    /// Certify the maximal recoverable sparsity level.
    Verify(VerifyArgs),
    /// Solve Basis Pursuit, the Dantzig selector or the Lasso.
    Recover(RecoverArgs),
    /// Monte Carlo RIC estimate and the RIC-based error bound.
    Ric(RicArgs),
    /// CMSV-based recovery error bounds.
    Bounds(BoundsArgs),
    /// Run one of the table or figure experiments.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Ensemble {
    Gaussian,
    Bernoulli,
    Hadamard,
}

#[derive(Debug, Args)]
pub struct GenMatrixArgs {
    #[arg(long, value_enum)]
    pub ensemble: Ensemble,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    /// Rescale every column to unit norm.
    #[arg(long)]
    pub normalize: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SparsityArgs {
    /// Order q; `inf` is accepted.
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct CmsvArgs {
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = qcmsv_core::cmsv::DEFAULT_RESTARTS)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VerifyMethod {
    Linf,
    Ccp,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub method: VerifyMethod,
    /// Order used by the convex-concave procedure.
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Program {
    Bp,
    Ds,
    Lasso,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long, value_enum)]
    pub program: Program,
    /// Measurement matrix CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Measurement vector CSV.
    #[arg(long)]
    pub measurements: PathBuf,
    /// Noise radius for BP.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Correlation bound for DS, penalty for the Lasso.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Write the recovered signal here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RicArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Half the support size: the estimate is of `delta_2k`.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = qcmsv_core::ric::DEFAULT_RIC_SAMPLES)]
    pub samples: usize,
    /// Also evaluate the RIC bound at this order (1 <= q <= 2).
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegimeArg {
    Sparse,
    Compressible,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub program: Program,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub k: usize,
    /// Noise radius (BP).
    #[arg(long)]
    pub eps: Option<f64>,
    /// `lambda_N sigma` (DS and Lasso).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Lasso noise fraction, in (0, 1).
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, value_enum, default_value_t = RegimeArg::Sparse)]
    pub regime: RegimeArg,
    /// Best k-term approximation error, required for the compressible regime.
    #[arg(long)]
    pub sigma_k: Option<f64>,
    #[arg(long, default_value_t = qcmsv_core::cmsv::DEFAULT_RESTARTS)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: ExperimentName,
    /// Output directory.
    #[arg(long, env = "QCMSV_OUT_DIR", default_value = "qcmsv-out")]
    pub out_dir: PathBuf,
    /// Number of random matrices per configuration.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Signal dimension N.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub m_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub q_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub s_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub k_list: Option<Vec<usize>>,
    #[arg(long)]
    pub ric_samples: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// table2 only: every row count of the full grid instead of three.
    #[arg(long)]
    pub full_grid: bool,
}
