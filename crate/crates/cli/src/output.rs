//! File output shared by the subcommands and experiments.
//!
//! Every JSON document follows one envelope, `{"config", "results",
//! "caveats"}`. Experiment manifests add the written files with their SHA-256
//! digests and the library version; wall-clock time goes to a separate timing
//! file so that the manifest itself is reproducible byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub config: Value,
    pub results: Vec<Value>,
    pub caveats: Vec<Value>,
}

impl Envelope {
    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    text
}

/// Caveat entry tying an estimator-direction flag to its source.
pub fn caveat(source: &str, direction: qcmsv_core::Direction, note: &str) -> Value {
    serde_json::json!({ "source": source, "direction": direction, "note": note })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output {
        path: dir.display().to_string(),
        message: e.to_string(),
    })
}

/// Serializes `rows` with a header taken from the field names.
pub fn csv_text<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("rows serialize to CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV output is UTF-8")
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Paths written by one experiment run.
#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub data: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub timing: PathBuf,
}
