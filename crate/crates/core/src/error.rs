use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("signal is identically zero")]
    ZeroSignal,

    #[error("sparsity order q = {0} is not allowed here (need q > 1)")]
    InvalidQ(f64),

    #[error("sparsity level s = {s} outside [1, {n}]")]
    InvalidS { s: f64, n: usize },

    #[error("q-order pair violates 1 < q2 <= q1: q1 = {q1}, q2 = {q2}")]
    InvalidOrder { q1: f64, q2: f64 },

    #[error("measurement matrix has a trivial kernel")]
    TrivialKernel,

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("solver did not converge{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    NotConverged { context: Option<String> },

    #[error("bound not applicable: {0}")]
    NotApplicable(String),

    #[error("CMSV was computed at s = {found}, but the bound needs s = {expected}")]
    SMismatch { expected: f64, found: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
