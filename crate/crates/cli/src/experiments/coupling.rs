//! Two-replica common-noise contraction: fitted decay rates of the weighted
//! gradient distance against the Dirichlet eigenvalue oracle (quadratic) and
//! the uniform-convexity bound (perturbed).

use super::{write_summary, CheckResult, ExperimentOutput};
use crate::config::ExperimentConfig;
use anyhow::Result;
use gglab_core::coupling::{contraction_rate, coupled_run};
use gglab_core::field::{BoundarySpec, HeightField};
use gglab_core::gibbs::GibbsModel;
use gglab_core::io::{fmt_float, write_csv};
use gglab_core::lattice::build_box;
use gglab_core::potential::{make_potential, PotentialSpec};
use gglab_core::rng::{stream_rng, Stream};
use gglab_core::solver::dirichlet_lambda1;
use std::path::Path;
use std::sync::Arc;

pub fn default_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig::bare("coupling-contraction", seed, 2, 8)
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput> {
    let dim = cfg.lattice.dim;
    let n = cfg.lattice.half_side;
    let bx = Arc::new(build_box(dim, n, &vec![0; dim])?);
    let m = (2 * n + 1) as usize;
    let lam1 = dirichlet_lambda1(dim, m, 1.0);
    let weight_rate = 0.5;
    let h = 0.01;
    // enough time for the sub-leading modes to die and a clean tail to form
    let total_time = 16.0 / (2.0 * lam1);
    let record_every = (0.1 / (h * lam1)).ceil() as usize;

    let make_pair = |tag: u64| -> Result<(HeightField, HeightField)> {
        let spec = BoundarySpec::zero();
        let mut a = HeightField::new(bx.clone(), &spec)?;
        let mut b = HeightField::new(bx.clone(), &spec)?;
        let mut rng = stream_rng(cfg.seed, Stream::InitialCondition, tag);
        a.fill_free_normal(&mut rng, |_| 0.0);
        b.fill_free_normal(&mut rng, |_| 0.0);
        Ok((a, b))
    };

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut files = Vec::new();

    // quadratic: rate within 5% of 2 lambda1
    let quad = GibbsModel::homogeneous(
        make_potential(PotentialSpec::Quadratic { kappa: 1.0 }).map_err(anyhow::Error::from)?,
    );
    let (a, b) = make_pair(0)?;
    let series_q = coupled_run(
        &quad,
        a,
        b,
        total_time,
        h,
        weight_rate,
        cfg.seed,
        record_every,
    )
    .map_err(anyhow::Error::from)?;
    let fit_q = contraction_rate(&series_q).map_err(anyhow::Error::from)?;
    let want = 2.0 * lam1;
    let dev = (fit_q.rate - want).abs() / want;
    checks.push(CheckResult::new(
        "coupling-quadratic-rate",
        fit_q.rate,
        format!("2 lambda1 = {}", fmt_float(want)),
        "5% relative",
        dev <= 0.05,
    ));

    // perturbed-convex: rate at least 1.8 C1 lambda1
    let pert = GibbsModel::homogeneous(
        make_potential(PotentialSpec::Perturbed { eps: 0.5 }).map_err(anyhow::Error::from)?,
    );
    let (a, b) = make_pair(1)?;
    let h_p = 0.1 / (2.0 * dim as f64 * 1.5);
    let series_p = coupled_run(
        &pert,
        a,
        b,
        total_time,
        h_p,
        weight_rate,
        cfg.seed + 1,
        record_every,
    )
    .map_err(anyhow::Error::from)?;
    let fit_p = contraction_rate(&series_p).map_err(anyhow::Error::from)?;
    let bound = 1.8 * lam1; // C1 = 1
    checks.push(CheckResult::new(
        "coupling-perturbed-rate",
        fit_p.rate,
        format!(">= 1.8 C1 lambda1 = {}", fmt_float(bound)),
        "lower bound",
        fit_p.rate >= bound,
    ));

    for (label, series) in [("quadratic", &series_q), ("perturbed", &series_p)] {
        for r in &series.rows {
            rows.push(vec![
                label.to_string(),
                fmt_float(r.time),
                fmt_float(r.weighted_distance),
                fmt_float(r.field_distance_sq),
                fmt_float(r.energy_a),
                fmt_float(r.energy_b),
            ]);
        }
    }
    let csv = out.join("coupling.csv");
    write_csv(
        &csv,
        &{
            let mut meta = super::common_metadata(cfg);
            meta.extend([
                ("lambda1", fmt_float(lam1)),
                ("weight_rate", fmt_float(weight_rate)),
            ]);
            meta
        },
        &[
            "case",
            "t",
            "d_r",
            "field_distance_sq",
            "energy_1",
            "energy_2",
        ],
        &rows,
    )?;
    files.push(csv);
    files.push(write_summary(out, &cfg.name, &checks)?);
    Ok(ExperimentOutput { checks, files })
}
