//! Killed-walk occupation identity: the Monte Carlo occupation time of the
//! continuous-time walk in a static quadratic environment equals the
//! precision-matrix inverse entry.

use super::{write_summary, CheckResult, ExperimentOutput};
use crate::config::ExperimentConfig;
use anyhow::Result;
use gglab_core::field::BoundarySpec;
use gglab_core::gaussian::GaussianModel;
use gglab_core::green::{hs_walk_green, DynamicEnvironment};
use gglab_core::io::{fmt_float, write_csv};
use gglab_core::lattice::{build_box, coord_from, Domain};
use std::path::Path;
use std::sync::Arc;

pub fn default_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::bare("hs-identity", seed, 2, 8);
    cfg.walkers = Some(100_000);
    cfg
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput> {
    let dim = cfg.lattice.dim;
    let n = cfg.lattice.half_side;
    let walkers = cfg.walkers.unwrap_or(100_000);
    let bx = Arc::new(build_box(dim, n, &vec![0; dim])?);
    let domain = Arc::new(Domain::interior((*bx).clone()));
    let kappa = 1.0;

    let env = DynamicEnvironment::static_environment(domain.clone(), None, kappa);
    let gauss = GaussianModel::build(bx, kappa, None, None, &BoundarySpec::zero())?;

    let pairs = [
        (coord_from(&[0, 0]), coord_from(&[0, 0])),
        (coord_from(&[0, 0]), coord_from(&[2, 1])),
        (coord_from(&[-3, 2]), coord_from(&[1, -1])),
    ];
    let mut rows = Vec::new();
    let mut worst_z = 0.0f64;
    for (k, (a, b)) in pairs.iter().enumerate() {
        let est = hs_walk_green(&env, a, b, walkers, cfg.seed.wrapping_add(k as u64))
            .map_err(anyhow::Error::from)?;
        let exact = gauss.covariance(a, b)?;
        let z = (est.value - exact).abs() / est.stderr;
        worst_z = worst_z.max(z);
        rows.push(vec![
            format!("({},{})", a[0], a[1]),
            format!("({},{})", b[0], b[1]),
            fmt_float(est.value),
            fmt_float(est.stderr),
            fmt_float(exact),
            fmt_float(z),
        ]);
    }

    let csv = out.join("hs_identity.csv");
    write_csv(
        &csv,
        &{
            let mut meta = super::common_metadata(cfg);
            meta.extend([
                ("walkers", walkers.to_string()),
                ("normalization", "continuous-time occupation".into()),
            ]);
            meta
        },
        &[
            "x",
            "z",
            "mc_estimate",
            "stderr",
            "precision_inverse",
            "z_score",
        ],
        &rows,
    )?;

    let checks = vec![CheckResult::new(
        "hs-occupation-identity",
        worst_z,
        "MC occupation time = precision inverse entry",
        "3 stderr",
        worst_z <= 3.0,
    )];
    let summary = write_summary(out, &cfg.name, &checks)?;
    Ok(ExperimentOutput {
        checks,
        files: vec![csv, summary],
    })
}
