//! Per-stage metadata records: seed, settings and content hashes of every
//! input and output. Wall-clock times appear here and nowhere else.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const META_DIR: &str = "meta";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMeta {
    pub stage: String,
    pub seed: u64,
    pub settings: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// SHA-256 of a file, or of a directory's relative paths and contents in
/// sorted order.
pub fn sha256_path(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut files = Vec::new();
        collect_files(path, &mut files)?;
        files.sort();
        for f in files {
            let rel = f.strip_prefix(path).unwrap_or(&f);
            hasher.update(rel.to_string_lossy().as_bytes());
            hasher.update([0]);
            hasher.update(fs::read(&f).map_err(|e| io_err(&f, e))?);
        }
    } else {
        hasher.update(fs::read(path).map_err(|e| io_err(path, e))?);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn label(run_dir: &Path, p: &Path) -> String {
    p.strip_prefix(run_dir).unwrap_or(p).display().to_string()
}

pub struct MetaBuilder {
    stage: String,
    seed: u64,
    settings: serde_json::Value,
    inputs: Vec<PathBuf>,
    started_at_ms: u64,
}

impl MetaBuilder {
    pub fn start(stage: &str, seed: u64) -> Self {
        Self {
            stage: stage.to_string(),
            seed,
            settings: serde_json::Value::Null,
            inputs: Vec::new(),
            started_at_ms: now_ms(),
        }
    }

    pub fn settings(mut self, settings: impl Serialize) -> Self {
        self.settings = serde_json::to_value(settings).unwrap_or(serde_json::Value::Null);
        self
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Hashes inputs and outputs and writes `meta/<slug>.json`.
    pub fn finish(self, run_dir: &Path, slug: &str, outputs: &[&Path]) -> Result<StageMeta> {
        let hash_all = |paths: &mut dyn Iterator<Item = &Path>| -> Result<BTreeMap<String, String>> {
            paths.map(|p| Ok((label(run_dir, p), sha256_path(p)?))).collect()
        };
        let meta = StageMeta {
            stage: self.stage,
            seed: self.seed,
            settings: self.settings,
            inputs: hash_all(&mut self.inputs.iter().map(PathBuf::as_path))?,
            outputs: hash_all(&mut outputs.iter().copied())?,
            started_at_ms: self.started_at_ms,
            finished_at_ms: now_ms(),
        };
        let path = run_dir.join(META_DIR).join(format!("{slug}.json"));
        trialsent_core::jsonl::write_json(&path, &meta)?;
        Ok(meta)
    }
}
