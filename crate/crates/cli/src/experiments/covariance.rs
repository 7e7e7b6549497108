//! Annealed covariance decay and the volume-growth contrast between d=2 and
//! d=3.

use super::{write_summary, CheckResult, ExperimentOutput};
use crate::config::ExperimentConfig;
use anyhow::Result;
use gglab_core::disorder::{DisorderLaw, ModelKind};
use gglab_core::estimators::{
    bond_disorder_covariance_decay, site_disorder_bond_variance, site_disorder_cov_at,
    site_disorder_covariance_decay,
};
use gglab_core::io::{fmt_float, write_csv};
use gglab_core::stats::linear_fit;
use std::path::Path;

pub fn site_default(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::bare("cov-decay-A", seed, 3, 24);
    cfg.model = Some(ModelKind::A);
    cfg.disorder = Some(DisorderLaw::Gaussian { sigma: 1.0 });
    cfg.separations = Some((2..=12).collect());
    cfg
}

pub fn run_site(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput> {
    let seps = cfg
        .separations
        .clone()
        .unwrap_or_else(|| (2..=12).collect());
    let sigma2 = cfg.disorder.map(|l| l.variance()).unwrap_or(1.0);
    let rep = site_disorder_covariance_decay(cfg.lattice.dim, cfg.lattice.half_side, &seps, sigma2)
        .map_err(anyhow::Error::from)?;

    let raw = rep.raw_values.as_ref().unwrap();
    let rows: Vec<Vec<String>> = rep
        .separations
        .iter()
        .zip(rep.values.iter().zip(raw))
        .map(|(&r, (&v, &rv))| vec![r.to_string(), fmt_float(v), fmt_float(rv)])
        .collect();
    let csv = out.join("cov_decay_site.csv");
    write_csv(
        &csv,
        &{
            let mut meta = super::common_metadata(cfg);
            meta.extend([
                ("dim", cfg.lattice.dim.to_string()),
                ("half_side", cfg.lattice.half_side.to_string()),
                ("sigma2", fmt_float(sigma2)),
                (
                    "geometry",
                    "bonds along e1, transverse separation along e2".into(),
                ),
            ]);
            meta
        },
        &["separation", "cov_extrapolated", "cov_raw"],
        &rows,
    )?;

    let exp = rep.exponent();
    let drop_shift = (rep.exponent_drop_smallest() - exp).abs();
    let checks = vec![
        CheckResult::new(
            "cov-site-exponent",
            exp,
            "decay exponent 1 (rate d - 2)",
            "within 0.3",
            (exp - 1.0).abs() <= 0.3,
        ),
        CheckResult::new(
            "cov-site-fit-stability",
            drop_shift,
            "exponent shift after dropping the smallest separation",
            "< 0.15",
            drop_shift < 0.15,
        ),
    ];
    let summary = write_summary(out, &cfg.name, &checks)?;
    Ok(ExperimentOutput {
        checks,
        files: vec![csv, summary],
    })
}

pub fn bond_default(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::bare("cov-decay-B", seed, 2, 12);
    cfg.model = Some(ModelKind::B);
    cfg.disorder = Some(DisorderLaw::UniformConductance {
        kappa: 1.0,
        delta: 0.2,
    });
    cfg.ensemble = Some(512);
    cfg.separations = Some((2..=6).collect());
    cfg
}

pub fn run_bond(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput> {
    let seps = cfg.separations.clone().unwrap_or_else(|| (2..=6).collect());
    let (kappa, delta) = match cfg.disorder {
        Some(DisorderLaw::UniformConductance { kappa, delta }) => (kappa, delta),
        _ => (1.0, 0.2),
    };
    let ensemble = cfg.ensemble.unwrap_or(512).max(256);
    let rep = bond_disorder_covariance_decay(
        cfg.lattice.dim,
        cfg.lattice.half_side,
        &seps,
        kappa,
        delta,
        ensemble,
        cfg.seed,
    )
    .map_err(anyhow::Error::from)?;

    let mc = rep.mc_values.as_ref().unwrap();
    let mut worst_z = 0.0f64;
    let rows: Vec<Vec<String>> = rep
        .separations
        .iter()
        .zip(rep.values.iter().zip(mc))
        .map(|(&r, (&oracle, &(mcv, se)))| {
            let z = (mcv - oracle).abs() / se;
            worst_z = worst_z.max(z);
            vec![
                r.to_string(),
                fmt_float(oracle),
                fmt_float(mcv),
                fmt_float(se),
                fmt_float(z),
            ]
        })
        .collect();
    let csv = out.join("cov_decay_bond.csv");
    write_csv(
        &csv,
        &{
            let mut meta = super::common_metadata(cfg);
            meta.extend([("kappa", fmt_float(kappa)),
            ("delta", fmt_float(delta)),
            ("ensemble", ensemble.to_string()),
            ("observable", "quenched bond variance (eta^2 mean at zero tilt)".into()),
            (
                "note",
                "exponent fitted on the first-order perturbative values; the ensemble checks them at 3 stderr".into(),
            )]);
            meta
        },
        &["separation", "oracle", "mc", "jackknife_stderr", "z_score"],
        &rows,
    )?;

    let exp = rep.exponent();
    let checks = vec![
        CheckResult::new(
            "cov-bond-exponent",
            exp,
            "decay exponent of the quadratic-observable covariance",
            ">= 1.5",
            exp >= 1.5,
        ),
        CheckResult::new(
            "cov-bond-mc-consistency",
            worst_z,
            "ensemble covariance vs perturbative values",
            "3 stderr",
            worst_z <= 3.0,
        ),
    ];
    let summary = write_summary(out, &cfg.name, &checks)?;
    Ok(ExperimentOutput {
        checks,
        files: vec![csv, summary],
    })
}

pub fn nonexist_default(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::bare("nonexist-2d", seed, 2, 32);
    cfg.sizes = Some(vec![8, 16, 32]);
    cfg.disorder = Some(DisorderLaw::Gaussian { sigma: 1.0 });
    cfg
}

pub fn run_nonexist(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput> {
    let sizes = cfg.sizes.clone().unwrap_or_else(|| vec![8, 16, 32]);
    let sigma2 = cfg.disorder.map(|l| l.variance()).unwrap_or(1.0);
    let mut rows = Vec::new();
    let mut vals = std::collections::BTreeMap::new();
    for &d in &[2usize, 3] {
        for &n in &sizes {
            let v = site_disorder_bond_variance(d, n, sigma2).map_err(anyhow::Error::from)?;
            vals.insert((d, n), v);
            rows.push(vec![d.to_string(), n.to_string(), fmt_float(v)]);
        }
    }
    // d=2 covariance at a fixed separation grows with the volume as well
    let mut cov_rows = Vec::new();
    for &n in &sizes {
        let c = site_disorder_cov_at(2, n, 2, sigma2).map_err(anyhow::Error::from)?;
        cov_rows.push(c);
        rows.push(vec!["2-cov-r2".into(), n.to_string(), fmt_float(c)]);
    }

    let mut checks = Vec::new();

    // d=2: positive slope against ln N
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = sizes.iter().map(|&n| vals[&(2, n)]).collect();
    let fit = linear_fit(&xs, &ys).map_err(anyhow::Error::from)?;
    checks.push(CheckResult::new(
        "nonexist-2d-growth",
        fit.slope,
        "variance of the quenched bond mean grows with ln N",
        "slope > 0",
        fit.slope > 0.0,
    ));
    checks.push(CheckResult::new(
        "nonexist-2d-cov-growth",
        cov_rows[cov_rows.len() - 1] - cov_rows[0],
        "fixed-separation covariance grows with N",
        "monotone increase",
        cov_rows.windows(2).all(|w| w[1] > w[0]),
    ));

    // d=3: bounded. Raw successive differences shrink, and the Richardson
    // limit estimates 2 V_N - V_{N/2} agree within 2%.
    let v: Vec<f64> = sizes.iter().map(|&n| vals[&(3, n)]).collect();
    let raw_diffs: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]) / w[1]).collect();
    let shrinking = raw_diffs.windows(2).all(|w| w[1] < w[0]);
    checks.push(CheckResult::new(
        "nonexist-d3-diffs-shrink",
        *raw_diffs.last().unwrap(),
        "raw successive relative differences decrease",
        "monotone",
        shrinking,
    ));
    let extrap: Vec<f64> = v.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let mut worst_ext = 0.0f64;
    for w in extrap.windows(2) {
        worst_ext = worst_ext.max((w[1] - w[0]).abs() / w[1]);
    }
    checks.push(CheckResult::new(
        "nonexist-d3-bounded",
        worst_ext,
        "stability of the extrapolated limit across volume pairs",
        "< 2%",
        worst_ext < 0.02,
    ));

    for (i, w) in raw_diffs.iter().enumerate() {
        rows.push(vec![
            "3-raw-rel-diff".into(),
            sizes[i + 1].to_string(),
            fmt_float(*w),
        ]);
    }
    for (i, e) in extrap.iter().enumerate() {
        rows.push(vec![
            "3-extrapolated".into(),
            sizes[i + 1].to_string(),
            fmt_float(*e),
        ]);
    }

    let csv = out.join("nonexist_2d.csv");
    write_csv(
        &csv,
        &{
            let mut meta = super::common_metadata(cfg);
            meta.extend([("sigma2", fmt_float(sigma2))]);
            meta
        },
        &["series", "n", "value"],
        &rows,
    )?;
    let summary = write_summary(out, &cfg.name, &checks)?;
    Ok(ExperimentOutput {
        checks,
        files: vec![csv, summary],
    })
}
