//! Batch experiment runner for the lattice gradient interface laboratory:
//! named experiments with deterministic seeding, CSV/manifest persistence,
//! and checksum replay.

pub mod config;
pub mod experiments;
pub mod manifest;

use config::ExperimentConfig;
use manifest::{RunManifest, StageTiming};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Exit codes shared by the binary and the tests.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAIL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const RUNTIME: i32 = 3;
}

pub struct RunResult {
    pub all_pass: bool,
    pub manifest_path: PathBuf,
    pub summary_lines: Vec<String>,
}

/// Execute one experiment end to end: run, write CSVs and summary, collect
/// checksums into the manifest.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<RunResult> {
    let started = Instant::now();
    let output = experiments::execute(config, out_dir)?;
    let elapsed = started.elapsed().as_secs_f64();
    let manifest = RunManifest::collect(
        config,
        out_dir,
        &output.files,
        &output.checks,
        elapsed,
        vec![StageTiming {
            stage: "run".into(),
            seconds: elapsed,
        }],
    )?;
    let manifest_path = out_dir.join("manifest.toml");
    manifest.save(&manifest_path)?;
    let summary_lines = output
        .checks
        .iter()
        .map(|c| {
            format!(
                "{}: measured={} target={} tolerance={} -> {}",
                c.id,
                gglab_core::io::fmt_float(c.measured),
                c.target,
                c.tolerance,
                if c.pass { "PASS" } else { "FAIL" }
            )
        })
        .collect();
    Ok(RunResult {
        all_pass: output.all_pass(),
        manifest_path,
        summary_lines,
    })
}

/// Build a rayon pool of the requested width and run inside it; `None`
/// keeps the default. Determinism does not depend on the width.
pub fn with_thread_pool<T>(
    threads: Option<usize>,
    f: impl FnOnce() -> anyhow::Result<T> + Send,
) -> anyhow::Result<T>
where
    T: Send,
{
    match threads {
        None => f(),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()?;
            pool.install(f)
        }
    }
}
