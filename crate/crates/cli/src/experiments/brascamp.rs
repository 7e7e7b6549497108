//! Brascamp-Lieb variance ratio: the height-difference variance under a
//! uniformly convex perturbation, bounded by the comparison Gaussian's
//! variance over C1.

use super::{write_summary, CheckResult, ExperimentOutput};
use crate::config::ExperimentConfig;
use anyhow::Result;
use gglab_core::field::{BoundarySpec, HeightField};
use gglab_core::gaussian::GaussianModel;
use gglab_core::gibbs::{run_sampler, GibbsModel};
use gglab_core::io::{fmt_float, write_csv};
use gglab_core::lattice::{build_box, coord_from};
use gglab_core::potential::{make_potential, PotentialSpec};
use gglab_core::rng::{stream_rng, Stream};
use std::path::Path;
use std::sync::Arc;

pub fn default_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::bare("brascamp-lieb", seed, 2, 8);
    cfg.potential = Some(PotentialSpec::Perturbed { eps: 0.5 });
    cfg.dynamics = Some(crate::config::DynamicsSection {
        step_h: 0.0167,
        burn_in_time: 200.0,
        thin_time: 1.0,
        samples: 40_000,
    });
    cfg
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput> {
    let dim = cfg.lattice.dim;
    let n = cfg.lattice.half_side;
    let bx = Arc::new(build_box(dim, n, &vec![0; dim])?);
    let spec = cfg
        .potential
        .unwrap_or(PotentialSpec::Perturbed { eps: 0.5 });
    let potential = make_potential(spec).map_err(anyhow::Error::from)?;
    let (c1, _) = potential
        .convexity_bounds()
        .ok_or_else(|| anyhow::anyhow!("the ratio needs a convexity certificate"))?;
    let sampler = cfg.dynamics.clone().map(|d| d.to_sampler()).unwrap_or(
        gglab_core::gibbs::SamplerConfig::defaults(
            &GibbsModel::homogeneous(potential),
            dim,
            (2 * n + 1) as usize,
        )?,
    );

    // height difference across the center bond
    let x0 = coord_from(&vec![0; dim]);
    let mut y0 = x0;
    y0[0] += 1;

    // comparison Gaussian: V0(s) = s^2/2, no external field, same domain
    let gauss = GaussianModel::build(bx.clone(), 1.0, None, None, &BoundarySpec::zero())?;
    let gaussian_var = gauss.difference_variance(&x0, &y0)?;

    let model = GibbsModel::homogeneous(potential);
    let f0 = HeightField::new(bx.clone(), &BoundarySpec::zero())?;
    let mut samples = Vec::with_capacity(sampler.samples);
    let mut rng = stream_rng(cfg.seed, Stream::Chain, 0);
    run_sampler(&model, f0, &sampler, &mut rng, |f| {
        samples.push(f.value(&x0).unwrap() - f.value(&y0).unwrap());
    })?;
    let rep = gglab_core::estimators::brascamp_lieb_ratio(
        &samples,
        c1,
        gaussian_var,
        (sampler.samples / 40).max(2) as u64,
    )?;

    let csv = out.join("brascamp_lieb.csv");
    write_csv(
        &csv,
        &{
            let mut meta = super::common_metadata(cfg);
            meta.extend([("c1", fmt_float(c1))]);
            meta
        },
        &[
            "ratio",
            "rel_stderr",
            "var_mc",
            "var_stderr",
            "gaussian_var",
        ],
        &[vec![
            fmt_float(rep.ratio),
            fmt_float(rep.rel_stderr),
            fmt_float(rep.var_mc),
            fmt_float(rep.var_stderr),
            fmt_float(rep.gaussian_var),
        ]],
    )?;

    let checks = vec![CheckResult::new(
        "brascamp-lieb-ratio",
        rep.ratio,
        "var ratio against the comparison Gaussian / C1",
        format!(
            "<= 1 + 3 rel_stderr = {}",
            fmt_float(1.0 + 3.0 * rep.rel_stderr)
        ),
        rep.within_bound,
    )];
    let summary = write_summary(out, &cfg.name, &checks)?;
    Ok(ExperimentOutput {
        checks,
        files: vec![csv, summary],
    })
}
