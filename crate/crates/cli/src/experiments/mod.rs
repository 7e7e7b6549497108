//! The named-experiment registry: each entry assembles the library modules
//! into one reproducible run with built-in pass/fail checks and CSV output.

mod brascamp;
mod convolution;
mod coupling;
mod covariance;
mod green;
mod hs;
mod pinning;
mod tilt;

use crate::config::ExperimentConfig;
use std::path::{Path, PathBuf};

/// One tolerance check of an experiment.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: String,
    pub measured: f64,
    pub target: String,
    pub tolerance: String,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(
        id: &str,
        measured: f64,
        target: impl Into<String>,
        tolerance: impl Into<String>,
        pass: bool,
    ) -> CheckResult {
        CheckResult {
            id: id.to_string(),
            measured,
            target: target.into(),
            tolerance: tolerance.into(),
            pass,
        }
    }
}

#[derive(Debug, Default)]
pub struct ExperimentOutput {
    pub checks: Vec<CheckResult>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutput {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub struct ExperimentEntry {
    pub name: &'static str,
    /// One-line description naming the mathematical content it exercises.
    pub summary: &'static str,
    pub default_config: fn(u64) -> ExperimentConfig,
    pub run: fn(&ExperimentConfig, &Path) -> anyhow::Result<ExperimentOutput>,
}

/// Stable registry order.
pub fn registry() -> Vec<ExperimentEntry> {
    vec![
        ExperimentEntry {
            name: "green-asymptotics",
            summary: "random-walk Green closed form in d=1 and the d=3 coefficient 3/(2 pi) via extrapolated column solves",
            default_config: green::asymptotics_default,
            run: green::run_asymptotics,
        },
        ExperimentEntry {
            name: "delocalize-2d",
            summary: "logarithmic growth of the d=2 Green diagonal over ball radii (the delocalization signal), with d=1/d=3 contrasts",
            default_config: green::delocalize_default,
            run: green::run_delocalize,
        },
        ExperimentEntry {
            name: "pinning",
            summary: "localization by a single pinned site: exact variance profiles |a| (d=1) and log|a| (d=2) plus the bisector-domain ratio band",
            default_config: pinning::default_config,
            run: pinning::run,
        },
        ExperimentEntry {
            name: "tilt",
            summary: "expected tilt under tilted boundaries: exact for the quadratic model, window-averaged Monte Carlo across a disorder ensemble otherwise",
            default_config: tilt::default_config,
            run: tilt::run,
        },
        ExperimentEntry {
            name: "brascamp-lieb",
            summary: "Brascamp-Lieb variance ratio for a height difference under a uniformly convex perturbation of the Gaussian",
            default_config: brascamp::default_config,
            run: brascamp::run,
        },
        ExperimentEntry {
            name: "coupling-contraction",
            summary: "common-noise two-replica contraction: fitted decay rate against the Dirichlet eigenvalue oracle and the convexity bound",
            default_config: coupling::default_config,
            run: coupling::run,
        },
        ExperimentEntry {
            name: "hs-identity",
            summary: "killed-walk occupation time versus the precision-matrix inverse in a static quadratic environment",
            default_config: hs::default_config,
            run: hs::run,
        },
        ExperimentEntry {
            name: "cov-decay-A",
            summary: "annealed covariance decay for site disorder: exact Gaussian computation, power-law fit against separation",
            default_config: covariance::site_default,
            run: covariance::run_site,
        },
        ExperimentEntry {
            name: "cov-decay-B",
            summary: "annealed covariance decay for conductance disorder: quadratic observables, perturbative oracle plus ensemble consistency",
            default_config: covariance::bond_default,
            run: covariance::run_bond,
        },
        ExperimentEntry {
            name: "nonexist-2d",
            summary: "growth of the quenched-mean variance with volume in d=2 versus boundedness in d=3",
            default_config: covariance::nonexist_default,
            run: covariance::run_nonexist,
        },
        ExperimentEntry {
            name: "convolution-appendix",
            summary: "stabilization of the normalized discrete convolution sums behind the covariance bounds",
            default_config: convolution::default_config,
            run: convolution::run,
        },
    ]
}

pub fn find(name: &str) -> Option<ExperimentEntry> {
    registry().into_iter().find(|e| e.name == name)
}

/// Execute by name with validation; the caller owns the output directory.
pub fn execute(config: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<ExperimentOutput> {
    config.validate()?;
    let entry = find(&config.name)
        .ok_or_else(|| anyhow::anyhow!("unknown experiment '{}'", config.name))?;
    std::fs::create_dir_all(out_dir)?;
    (entry.run)(config, out_dir)
}

/// Common CSV metadata: experiment name, seed, and a content hash of the
/// config so result files are traceable to their exact inputs.
pub fn common_metadata(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    use sha2::{Digest, Sha256};
    let text = cfg.to_toml().unwrap_or_default();
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    vec![
        ("experiment", cfg.name.clone()),
        ("seed", cfg.seed.to_string()),
        ("config_sha256", format!("{:x}", h.finalize())),
    ]
}

/// Shared summary writer: one line per check.
pub fn write_summary(
    out_dir: &Path,
    name: &str,
    checks: &[CheckResult],
) -> anyhow::Result<PathBuf> {
    let path = out_dir.join("summary.txt");
    let mut text = String::new();
    text.push_str(&format!("experiment: {name}\n"));
    for c in checks {
        text.push_str(&format!(
            "{}: measured={} target={} tolerance={} -> {}\n",
            c.id,
            gglab_core::io::fmt_float(c.measured),
            c.target,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        ));
    }
    text.push_str(&format!(
        "overall: {}\n",
        if checks.iter().all(|c| c.pass) {
            "PASS"
        } else {
            "FAIL"
        }
    ));
    std::fs::write(&path, text)?;
    Ok(path)
}
