//! Pinning localization: exact variance profiles of the Gaussian field
//! pinned at the origin with zero outer boundary.

use super::{write_summary, CheckResult, ExperimentOutput};
use crate::config::ExperimentConfig;
use anyhow::Result;
use gglab_core::estimators::pinned_variance_profile;
use gglab_core::io::{fmt_float, write_csv};
use std::path::Path;

pub fn default_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::bare("pinning", seed, 2, 64);
    cfg.probes = Some(vec![2, 3, 4, 6, 8, 12, 16]);
    cfg
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput> {
    let n = cfg.lattice.half_side;
    let probes_d1: Vec<i32> = (2..=12).collect();
    let probes_d2 = cfg
        .probes
        .clone()
        .unwrap_or_else(|| vec![2, 3, 4, 6, 8, 12, 16]);

    let prof1 = pinned_variance_profile(1, n, &probes_d1)?;
    let prof2 = pinned_variance_profile(2, n, &probes_d2)?;

    let mut rows = Vec::new();
    for (p, (&a, (&v, &r))) in [(1, &prof1), (2, &prof2)].iter().flat_map(|(d, prof)| {
        prof.probes
            .iter()
            .zip(prof.variances.iter().zip(prof.ratios.iter()))
            .map(move |x| (*d, x))
    }) {
        rows.push(vec![
            p.to_string(),
            a.to_string(),
            fmt_float(v),
            fmt_float(r),
        ]);
    }
    let csv = out.join("pinned_profiles.csv");
    write_csv(
        &csv,
        &{
            let mut meta = super::common_metadata(cfg);
            meta.extend([("half_side", n.to_string())]);
            meta
        },
        &["dim", "probe", "variance", "bisector_ratio"],
        &rows,
    )?;

    let ratios_ok = prof1
        .ratios
        .iter()
        .chain(&prof2.ratios)
        .all(|&r| (1.0 / 3.0..=3.0).contains(&r));
    let worst_ratio = prof1
        .ratios
        .iter()
        .chain(&prof2.ratios)
        .fold(1.0f64, |acc, &r| {
            if (r - 1.0).abs() > (acc - 1.0).abs() {
                r
            } else {
                acc
            }
        });

    let checks = vec![
        CheckResult::new(
            "pinning-d1-linear-r2",
            prof1.fit.r_squared,
            "linear growth of var in |a|",
            "R^2 >= 0.99",
            prof1.fit.r_squared >= 0.99,
        ),
        CheckResult::new(
            "pinning-d2-log-r2",
            prof2.fit.r_squared,
            "log growth of var in |a|",
            "R^2 >= 0.95",
            prof2.fit.r_squared >= 0.95,
        ),
        CheckResult::new(
            "pinning-bisector-ratio-band",
            worst_ratio,
            "ratio against the bisector-domain variance",
            "within [1/3, 3]",
            ratios_ok,
        ),
    ];
    let summary = write_summary(out, &cfg.name, &checks)?;
    Ok(ExperimentOutput {
        checks,
        files: vec![csv, summary],
    })
}
