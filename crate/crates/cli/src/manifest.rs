//! Run manifests: config echo, timings, and output checksums, plus the
//! replay verification that re-executes a manifest and diffs the checksums.

use crate::config::ExperimentConfig;
use crate::experiments::CheckResult;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub measured: f64,
    pub target: String,
    pub tolerance: String,
    pub pass: bool,
}

impl From<&CheckResult> for CheckRecord {
    fn from(c: &CheckResult) -> Self {
        CheckRecord {
            id: c.id.clone(),
            measured: c.measured,
            target: c.target.clone(),
            tolerance: c.tolerance.clone(),
            pass: c.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub config: ExperimentConfig,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub files: Vec<FileRecord>,
    pub checks: Vec<CheckRecord>,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<(String, u64)> {
    let bytes = std::fs::read(path)?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok((format!("{:x}", h.finalize()), bytes.len() as u64))
}

impl RunManifest {
    pub fn collect(
        config: &ExperimentConfig,
        out_dir: &Path,
        files: &[PathBuf],
        checks: &[CheckResult],
        wall_clock_seconds: f64,
        stages: Vec<StageTiming>,
    ) -> anyhow::Result<RunManifest> {
        let mut records = Vec::new();
        for f in files {
            let (sha, bytes) = sha256_file(f)?;
            let name = f
                .strip_prefix(out_dir)
                .unwrap_or(f)
                .to_string_lossy()
                .into_owned();
            records.push(FileRecord {
                name,
                sha256: sha,
                bytes,
            });
        }
        Ok(RunManifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            wall_clock_seconds,
            stages,
            files: records,
            checks: checks.iter().map(CheckRecord::from).collect(),
        })
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, toml::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<RunManifest> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }
}

#[derive(Debug)]
pub enum ReplayOutcome {
    Identical { files: usize },
    Drift { mismatched: Vec<String> },
}

/// Re-run the manifest's config into `scratch_dir` and compare output
/// checksums file by file.
pub fn replay(manifest: &RunManifest, scratch_dir: &Path) -> anyhow::Result<ReplayOutcome> {
    let mut config = manifest.config.clone();
    config.out_dir = Some(scratch_dir.to_string_lossy().into_owned());
    let rerun = crate::experiments::execute(&config, scratch_dir)?;
    let _ = rerun;
    let mut mismatched = Vec::new();
    for rec in &manifest.files {
        let path = scratch_dir.join(&rec.name);
        if !path.exists() {
            anyhow::bail!("replay output missing file {}", rec.name);
        }
        let (sha, _) = sha256_file(&path)?;
        if sha != rec.sha256 {
            mismatched.push(rec.name.clone());
        }
    }
    if mismatched.is_empty() {
        Ok(ReplayOutcome::Identical {
            files: manifest.files.len(),
        })
    } else {
        Ok(ReplayOutcome::Drift { mismatched })
    }
}
