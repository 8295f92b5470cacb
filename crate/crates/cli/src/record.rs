//! Append-only run records (one JSON object per line).

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub w_in: usize,
    pub w_out: usize,
    pub r2: Option<f64>,
    pub mse: Option<f64>,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub train_samples: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedModel {
    pub w_out: usize,
    pub w_in: usize,
    pub r2: f64,
    pub fraction_improved: f64,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    pub precision: String,
    /// Hourly offsets available for training after cleaning.
    pub train_hours: usize,
    pub sweep: Vec<SweepEntry>,
    pub selected: Vec<SelectedModel>,
    pub seconds: f64,
    pub outputs: Vec<PathBuf>,
}

impl RunRecord {
    /// R² values over the input-window grid for one `w_out`, ordered by `w_in`.
    pub fn r2_by_w_in(&self, w_out: usize) -> Vec<(usize, Option<f64>)> {
        let mut rows: Vec<_> = self.sweep.iter().filter(|e| e.w_out == w_out).map(|e| (e.w_in, e.r2)).collect();
        rows.sort_by_key(|r| r.0);
        rows
    }

    pub fn w_outs(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.sweep.iter().map(|e| e.w_out).collect();
        w.sort_unstable();
        w.dedup();
        w
    }
}

pub fn append(path: &Path, record: &RunRecord) -> Result<()> {
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening run record file {}", path.display()))?;
    let line = serde_json::to_string(record)?;
    writeln!(f, "{line}").with_context(|| format!("appending to {}", path.display()))?;
    Ok(())
}

pub fn read_all(path: &Path) -> Result<Vec<RunRecord>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening run records {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}: malformed run record", path.display(), i + 1))?);
    }
    if out.is_empty() {
        bail!("{}: no run records", path.display());
    }
    Ok(out)
}

/// SHA-256 over the canonical scenario JSON followed by every input file's bytes.
pub fn config_hash(config_json: &str, inputs: &[PathBuf]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(config_json.as_bytes());
    for p in inputs {
        let bytes = std::fs::read(p).with_context(|| format!("hashing {}", p.display()))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}
