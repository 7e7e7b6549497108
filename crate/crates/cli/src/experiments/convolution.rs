//! Stabilization of the normalized discrete convolution sums as the
//! summation radius doubles.

use super::{write_summary, CheckResult, ExperimentOutput};
use crate::config::ExperimentConfig;
use anyhow::Result;
use gglab_core::estimators::{convolution_bound_check, ConvolutionForm};
use gglab_core::io::{fmt_float, write_csv};
use std::path::Path;

pub fn default_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::bare("convolution-appendix", seed, 3, 1);
    cfg.radii = Some(vec![64, 128]);
    cfg.separations = Some((1..=16).collect());
    cfg
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput> {
    let radii = cfg.radii.clone().unwrap_or_else(|| vec![64, 128]);
    let seps = cfg
        .separations
        .clone()
        .unwrap_or_else(|| (1..=16).collect());

    let cases: Vec<(String, usize, ConvolutionForm)> = vec![
        (
            "gradient-kernel-d3".into(),
            3,
            ConvolutionForm::gradient_kernel(3).map_err(anyhow::Error::from)?,
        ),
        (
            "mixed-kernel-d1".into(),
            1,
            ConvolutionForm::mixed_kernel(1),
        ),
        (
            "mixed-kernel-d2".into(),
            2,
            ConvolutionForm::mixed_kernel(2),
        ),
        (
            "mixed-kernel-d3".into(),
            3,
            ConvolutionForm::mixed_kernel(3),
        ),
    ];

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (label, dim, form) in cases {
        let rep = convolution_bound_check(dim, form, &radii, &seps).map_err(anyhow::Error::from)?;
        for (i, &r) in rep.radii.iter().enumerate() {
            rows.push(vec![
                label.clone(),
                dim.to_string(),
                r.to_string(),
                fmt_float(rep.sups[i].0),
                rep.sups[i].1.to_string(),
                if i > 0 {
                    fmt_float(rep.rel_changes[i - 1])
                } else {
                    "".into()
                },
            ]);
        }
        let worst = rep.rel_changes.iter().fold(0.0f64, |a, &b| a.max(b));
        checks.push(CheckResult::new(
            &format!("convolution-{label}"),
            worst,
            "normalized sup change on radius doubling",
            "< 5%",
            worst < 0.05,
        ));
    }

    let csv = out.join("convolution.csv");
    write_csv(
        &csv,
        &{
            let mut meta = super::common_metadata(cfg);
            meta.extend([("norm", "max(|.|, 1), Euclidean".into())]);
            meta
        },
        &[
            "case",
            "dim",
            "radius",
            "sup",
            "argmax_separation",
            "rel_change",
        ],
        &rows,
    )?;
    let summary = write_summary(out, &cfg.name, &checks)?;
    Ok(ExperimentOutput {
        checks,
        files: vec![csv, summary],
    })
}
