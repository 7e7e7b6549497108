//! Experiment configuration: a TOML document with typed sections, read and
//! written losslessly so manifests can echo the exact run parameters.

use anyhow::{bail, Context};
use gglab_core::disorder::{DisorderLaw, ModelKind};
use gglab_core::field::BoundarySpec;
use gglab_core::potential::PotentialSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSection {
    pub dim: usize,
    pub half_side: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSection {
    pub step_h: f64,
    pub burn_in_time: f64,
    pub thin_time: f64,
    pub samples: usize,
}

impl DynamicsSection {
    pub fn to_sampler(&self) -> gglab_core::gibbs::SamplerConfig {
        gglab_core::gibbs::SamplerConfig {
            step_h: self.step_h,
            burn_in_time: self.burn_in_time,
            thin_time: self.thin_time,
            samples: self.samples,
            guard: gglab_core::gibbs::DEFAULT_GUARD,
            noise: gglab_core::gibbs::NoiseMode::Standard,
        }
    }
}

/// One experiment run. Every numeric field is validated against the module
/// preconditions before any compute starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub lattice: LatticeSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderLaw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundarySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSection>,
    /// Box half-sides for experiments scanning over volumes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<i32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separations: Option<Vec<i32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<i32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<i32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_half: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walkers: Option<usize>,
}

impl ExperimentConfig {
    pub fn bare(name: &str, seed: u64, dim: usize, half_side: i32) -> ExperimentConfig {
        ExperimentConfig {
            name: name.to_string(),
            seed,
            out_dir: None,
            threads: None,
            lattice: LatticeSection { dim, half_side },
            model: None,
            potential: None,
            disorder: None,
            ensemble: None,
            boundary: None,
            dynamics: None,
            sizes: None,
            separations: None,
            probes: None,
            radii: None,
            window_half: None,
            walkers: None,
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Check every numeric field against module preconditions.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.lattice.dim == 0 || self.lattice.dim > 4 {
            bail!("lattice.dim must be 1..=4");
        }
        if self.lattice.half_side < 1 {
            bail!("lattice.half_side must be >= 1");
        }
        if let Some(p) = self.potential {
            gglab_core::potential::make_potential(p)
                .map_err(|e| anyhow::anyhow!("potential: {e}"))?;
        }
        if let (Some(model), Some(law)) = (self.model, self.disorder) {
            law.validate(model)
                .map_err(|e| anyhow::anyhow!("disorder: {e}"))?;
        }
        if let Some(d) = &self.dynamics {
            if !(d.step_h > 0.0) || d.burn_in_time < 0.0 || !(d.thin_time > 0.0) {
                bail!("dynamics times must be positive");
            }
            if d.samples == 0 {
                bail!("dynamics.samples must be positive");
            }
        }
        if let Some(e) = self.ensemble {
            if e == 0 {
                bail!("ensemble must be positive");
            }
        }
        if let Some(w) = self.walkers {
            if w == 0 {
                bail!("walkers must be positive");
            }
        }
        if let Some(s) = &self.sizes {
            if s.is_empty() || s.iter().any(|&n| n < 1) {
                bail!("sizes must be non-empty positive half-sides");
            }
        }
        if let Some(s) = &self.separations {
            if s.iter().any(|&r| r < 1) {
                bail!("separations must be >= 1");
            }
        }
        if let Some(w) = self.window_half {
            if w < 0 || w + 1 > self.lattice.half_side {
                bail!("window_half must fit inside the box with its bond heads");
            }
        }
        Ok(())
    }
}
