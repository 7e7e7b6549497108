//! Finite-volume Gibbs machinery: energies, drifts, and Euler-Maruyama
//! Langevin dynamics for the unified Hamiltonian
//!
//! ```text
//! H(phi) = sum_bonds kappa_b V(phi(x) - phi(y)) + sum_{x in interior} xi(x) phi(x)
//! ```
//!
//! where the bond sum runs once over undirected bonds with at least one
//! interior endpoint (the half-ordered inner sum plus the boundary terms),
//! `kappa_b = 1` for site disorder (model A) and `xi = 0` for bond
//! disorder (model B). The dynamics is the gradient flow `dphi = -grad H dt
//! + sqrt(2) dW` on free sites; frozen sites (boundary and pinned) never
//! move. The site-field sign follows the Hamiltonian above; for the
//! symmetric disorder laws in scope the opposite coupling is equal in law.

use crate::disorder::{BondField, SiteField};
use crate::error::{Error, Result};
use crate::field::HeightField;
use crate::lattice::SiteIdx;
use crate::potential::Potential;
use crate::solver::dirichlet_lambda1;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Default divergence guard on |phi|.
pub const DEFAULT_GUARD: f64 = 1e8;

/// Bond potentials plus site fields; the common description of both models.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    pub potential: Potential,
    /// Per-bond conductances multiplying the potential; `None` = 1.
    pub conductances: Option<BondField>,
    /// Per-site external fields coupling linearly; `None` = 0.
    pub site_fields: Option<SiteField>,
}

impl GibbsModel {
    pub fn homogeneous(potential: Potential) -> GibbsModel {
        GibbsModel {
            potential,
            conductances: None,
            site_fields: None,
        }
    }

    pub fn with_site_fields(potential: Potential, xi: SiteField) -> GibbsModel {
        GibbsModel {
            potential,
            conductances: None,
            site_fields: Some(xi),
        }
    }

    pub fn with_conductances(potential: Potential, kappa: BondField) -> GibbsModel {
        GibbsModel {
            potential,
            conductances: Some(kappa),
            site_fields: None,
        }
    }

    /// Effective convexity window including the conductance envelope.
    pub fn convexity_bounds(&self) -> Option<(f64, f64)> {
        let (c1, c2) = self.potential.convexity_bounds()?;
        match &self.conductances {
            None => Some((c1, c2)),
            Some(k) => {
                let (lo, hi) = k.min_max();
                if lo <= 0.0 {
                    None
                } else {
                    Some((c1 * lo, c2 * hi))
                }
            }
        }
    }

    /// Total energy of a configuration consistent with its frozen mask.
    pub fn energy(&self, field: &HeightField) -> Result<f64> {
        let bx = field.boxref();
        self.check_shapes(field)?;
        let vals = field.values();
        let mut h = 0.0;
        for bond in bx.canonical_bonds() {
            let ti = bx.site_index(&bond.tail).unwrap();
            let hi = bx.site_index(&bond.head).unwrap();
            let ax = bond.axis(bx.dim());
            let k = self
                .conductances
                .as_ref()
                .map(|c| c.value(ti, ax))
                .unwrap_or(1.0);
            h += k * self.potential.value(vals[hi as usize] - vals[ti as usize]);
        }
        if let Some(xi) = &self.site_fields {
            for idx in 0..bx.interior_count() as SiteIdx {
                h += xi.value(idx) * vals[idx as usize];
            }
        }
        Ok(h)
    }

    /// `-dH/dphi(y)` for every free site, in site-index order. Also returns
    /// the free-site indices.
    pub fn drift(&self, field: &HeightField) -> Result<(Vec<SiteIdx>, Vec<f64>)> {
        self.check_shapes(field)?;
        let eng = Dynamics::new(self, field.clone())?;
        let mut out = vec![0.0; eng.free.len()];
        eng.drift_into(eng.field.values(), &mut out);
        Ok((eng.free, out))
    }

    fn check_shapes(&self, field: &HeightField) -> Result<()> {
        let total = field.boxref().total_sites();
        if let Some(xi) = &self.site_fields {
            if xi.values().len() != total {
                return Err(Error::ShapeMismatch(format!(
                    "site fields cover {} sites, box has {total}",
                    xi.values().len()
                )));
            }
        }
        Ok(())
    }
}

/// Noise switch for the Euler-Maruyama step; `Off` is the zero-temperature
/// test hook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseMode {
    Standard,
    Off,
}

/// Precomputed adjacency for the hot loop: free sites, their 2d neighbors
/// (global indices), bond conductances, and site fields.
pub struct Dynamics<'m> {
    model: &'m GibbsModel,
    pub field: HeightField,
    free: Vec<SiteIdx>,
    nbrs: Vec<u32>,
    weights: Vec<f64>,
    xi: Vec<f64>,
    drift_buf: Vec<f64>,
    guard: f64,
    pub time: f64,
    pub steps: u64,
}

impl<'m> Dynamics<'m> {
    pub fn new(model: &'m GibbsModel, field: HeightField) -> Result<Dynamics<'m>> {
        model.check_shapes(&field)?;
        let bx = field.boxref().clone();
        let dim = bx.dim();
        let slots = 2 * dim;
        let mut free = Vec::new();
        for idx in 0..bx.interior_count() as SiteIdx {
            if !field.is_frozen(idx) {
                free.push(idx);
            }
        }
        let mut nbrs = vec![0u32; free.len() * slots];
        let mut weights = vec![0.0; free.len() * slots];
        let mut xi = vec![0.0; free.len()];
        for (l, &idx) in free.iter().enumerate() {
            let c = bx.site_coord(idx);
            let mut slot = 0;
            for ax in 0..dim {
                for sgn in [1i32, -1] {
                    let mut nb = c;
                    nb[ax] += sgn;
                    let tail = if sgn > 0 { c } else { nb };
                    let g = bx
                        .site_index(&nb)
                        .expect("interior neighbors stay in the box");
                    nbrs[l * slots + slot] = g;
                    weights[l * slots + slot] = model
                        .conductances
                        .as_ref()
                        .map(|k| k.value(bx.site_index(&tail).unwrap(), ax))
                        .unwrap_or(1.0);
                    slot += 1;
                }
            }
            if let Some(f) = &model.site_fields {
                xi[l] = f.value(idx);
            }
        }
        let n = free.len();
        Ok(Dynamics {
            model,
            field,
            free,
            nbrs,
            weights,
            xi,
            drift_buf: vec![0.0; n],
            guard: DEFAULT_GUARD,
            time: 0.0,
            steps: 0,
        })
    }

    pub fn set_guard(&mut self, guard: f64) {
        self.guard = guard;
    }

    pub fn free_sites(&self) -> &[SiteIdx] {
        &self.free
    }

    fn drift_into(&self, vals: &[f64], out: &mut [f64]) {
        let slots = self.nbrs.len() / self.free.len().max(1);
        let v = &self.model.potential;
        for (l, &idx) in self.free.iter().enumerate() {
            let phi = vals[idx as usize];
            let base = l * slots;
            let mut acc = 0.0;
            for s in 0..slots {
                let nb = self.nbrs[base + s] as usize;
                acc += self.weights[base + s] * v.dv(vals[nb] - phi);
            }
            out[l] = acc - self.xi[l];
        }
    }

    /// One Euler-Maruyama step `phi += h drift + sqrt(2h) g`.
    pub fn step(&mut self, h: f64, rng: &mut impl Rng, noise: NoiseMode) -> Result<()> {
        debug_assert!(h > 0.0);
        let mut buf = std::mem::take(&mut self.drift_buf);
        self.drift_into(self.field.values(), &mut buf);
        let amp = (2.0 * h).sqrt();
        let vals = self.field.values_mut();
        for (l, &idx) in self.free.iter().enumerate() {
            let mut x = vals[idx as usize] + h * buf[l];
            if noise == NoiseMode::Standard {
                let g: f64 = rng.sample(StandardNormal);
                x += amp * g;
            }
            if !(x.abs() <= self.guard) {
                let c = self.field.boxref().site_coord(idx);
                let dim = self.field.boxref().dim();
                self.drift_buf = buf;
                return Err(Error::Divergence {
                    site: c[..dim].to_vec(),
                    value: x,
                    guard: self.guard,
                });
            }
            vals[idx as usize] = x;
        }
        self.drift_buf = buf;
        self.time += h;
        self.steps += 1;
        Ok(())
    }

    /// Euler-Maruyama step with externally supplied standard normals, one
    /// per free site in order; the common-noise path for coupled replicas.
    pub fn step_with_noise(&mut self, h: f64, noise: &[f64]) -> Result<()> {
        debug_assert!(h > 0.0);
        debug_assert_eq!(noise.len(), self.free.len());
        let mut buf = std::mem::take(&mut self.drift_buf);
        self.drift_into(self.field.values(), &mut buf);
        let amp = (2.0 * h).sqrt();
        let vals = self.field.values_mut();
        for (l, &idx) in self.free.iter().enumerate() {
            let x = vals[idx as usize] + h * buf[l] + amp * noise[l];
            if !(x.abs() <= self.guard) {
                let c = self.field.boxref().site_coord(idx);
                let dim = self.field.boxref().dim();
                self.drift_buf = buf;
                return Err(Error::Divergence {
                    site: c[..dim].to_vec(),
                    value: x,
                    guard: self.guard,
                });
            }
            vals[idx as usize] = x;
        }
        self.drift_buf = buf;
        self.time += h;
        self.steps += 1;
        Ok(())
    }

    /// Sup-norm of the current drift.
    pub fn drift_norm(&mut self) -> f64 {
        let mut buf = std::mem::take(&mut self.drift_buf);
        self.drift_into(self.field.values(), &mut buf);
        let norm = buf.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        self.drift_buf = buf;
        norm
    }
}

/// Standalone single step matching the operation contract.
pub fn langevin_step(
    model: &GibbsModel,
    field: &mut HeightField,
    h: f64,
    rng: &mut impl Rng,
    noise: NoiseMode,
) -> Result<()> {
    let mut dyn_ = Dynamics::new(model, field.clone())?;
    dyn_.step(h, rng, noise)?;
    *field = dyn_.field;
    Ok(())
}

/// Sampler schedule. Times are in dynamics time units; steps are derived.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub step_h: f64,
    pub burn_in_time: f64,
    pub thin_time: f64,
    pub samples: usize,
    pub guard: f64,
    pub noise: NoiseMode,
}

impl SamplerConfig {
    /// Ledger defaults: `h = 0.1/(2 d C2)` (explicit-Euler stability with a
    /// 5x margin on the stiffest mode) and burn-in `10/(C1 lambda1)` from
    /// the coupling contraction rate on the cube.
    pub fn defaults(
        model: &GibbsModel,
        dim: usize,
        m_sites_per_axis: usize,
    ) -> Result<SamplerConfig> {
        let (c1, c2) = model.convexity_bounds().ok_or_else(|| {
            Error::Unsupported(
                "no convexity certificate (exploratory potential): pick the schedule explicitly"
                    .into(),
            )
        })?;
        let h = 0.1 / (2.0 * dim as f64 * c2);
        let lambda1 = dirichlet_lambda1(dim, m_sites_per_axis, 1.0);
        let burn_in = 10.0 / (c1 * lambda1);
        Ok(SamplerConfig {
            step_h: h,
            burn_in_time: burn_in,
            thin_time: 1.0 / (c1 * lambda1),
            samples: 1000,
            guard: DEFAULT_GUARD,
            noise: NoiseMode::Standard,
        })
    }
}

/// Diagnostics from a sampling run.
#[derive(Debug, Clone)]
pub struct SamplerDiagnostics {
    /// `(time, energy)` at each retained sample.
    pub energy_trace: Vec<(f64, f64)>,
    /// Lag-1 autocorrelation of the retained energy series.
    pub energy_autocorr: f64,
    pub total_steps: u64,
}

/// Run burn-in then hand each decorrelated sample to `on_sample`.
pub fn run_sampler(
    model: &GibbsModel,
    field0: HeightField,
    cfg: &SamplerConfig,
    rng: &mut impl Rng,
    mut on_sample: impl FnMut(&HeightField),
) -> Result<SamplerDiagnostics> {
    if !(cfg.step_h > 0.0) {
        return Err(Error::InvalidParameter("step size must be positive".into()));
    }
    let mut dynamics = Dynamics::new(model, field0)?;
    dynamics.set_guard(cfg.guard);
    let burn_steps = (cfg.burn_in_time / cfg.step_h).ceil() as u64;
    let thin_steps = (cfg.thin_time / cfg.step_h).ceil().max(1.0) as u64;
    for _ in 0..burn_steps {
        dynamics.step(cfg.step_h, rng, cfg.noise)?;
    }
    let mut trace = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        for _ in 0..thin_steps {
            dynamics.step(cfg.step_h, rng, cfg.noise)?;
        }
        let e = model.energy(&dynamics.field)?;
        trace.push((dynamics.time, e));
        on_sample(&dynamics.field);
    }
    let autocorr = lag1_autocorr(trace.iter().map(|&(_, e)| e));
    Ok(SamplerDiagnostics {
        energy_trace: trace,
        energy_autocorr: autocorr,
        total_steps: dynamics.steps,
    })
}

/// Collect decorrelated samples; convenience form of [`run_sampler`].
pub fn equilibrate_and_sample(
    model: &GibbsModel,
    field0: HeightField,
    cfg: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<HeightField>, SamplerDiagnostics)> {
    let mut out = Vec::with_capacity(cfg.samples);
    let diag = run_sampler(model, field0, cfg, rng, |f| out.push(f.clone()))?;
    Ok((out, diag))
}

fn lag1_autocorr(series: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = series.collect();
    let n = xs.len();
    if n < 3 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let d = xs[i] - mean;
        den += d * d;
        if i + 1 < n {
            num += d * (xs[i + 1] - mean);
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BoundarySpec;
    use crate::lattice::{build_box, coord_from};
    use crate::potential::{make_potential, PotentialSpec};
    use crate::rng::{stream_rng, Stream};
    use std::sync::Arc;

    fn quad_model(kappa: f64) -> GibbsModel {
        GibbsModel::homogeneous(make_potential(PotentialSpec::Quadratic { kappa }).unwrap())
    }

    fn single_site_field() -> HeightField {
        let bx = Arc::new(build_box(1, 1, &[0]).unwrap());
        let spec = BoundarySpec::zero_pinned(vec![vec![-1], vec![1]]);
        HeightField::new(bx, &spec).unwrap()
    }

    #[test]
    fn energy_single_site_examples() {
        // free {0}, psi(+-1)=0, phi(0)=1, V=s^2/2: two boundary bonds give 1
        let mut f = single_site_field();
        f.set(&coord_from(&[0]), 1.0).unwrap();
        let m = quad_model(1.0);
        assert!((m.energy(&f).unwrap() - 1.0).abs() < 1e-14);
        // adding xi(0) = 0.5 adds 0.5 * phi(0)
        let bx = f.boxref().clone();
        let mut xi = vec![0.0; bx.total_sites()];
        xi[bx.site_index(&coord_from(&[0])).unwrap() as usize] = 0.5;
        let m2 = GibbsModel::with_site_fields(
            make_potential(PotentialSpec::Quadratic { kappa: 1.0 }).unwrap(),
            crate::disorder::site_field_from_values(&bx, xi).unwrap(),
        );
        assert!((m2.energy(&f).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn zero_field_zero_energy() {
        let f = single_site_field();
        assert_eq!(quad_model(3.0).energy(&f).unwrap(), 0.0);
    }

    #[test]
    fn drift_single_site() {
        let mut f = single_site_field();
        f.set(&coord_from(&[0]), 1.0).unwrap();
        let (free, d) = quad_model(1.0).drift(&f).unwrap();
        assert_eq!(free.len(), 1);
        assert!((d[0] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn drift_vanishes_on_harmonic_plane() {
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let spec = BoundarySpec::tilt(&[0.7, -0.2]);
        let mut f = HeightField::new(bx, &spec).unwrap();
        f.fill_free(|c| 0.7 * c[0] as f64 - 0.2 * c[1] as f64);
        let (_, d) = quad_model(1.0).drift(&f).unwrap();
        let norm = d.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        assert!(norm < 1e-12);
    }

    #[test]
    fn drift_matches_finite_difference_of_energy() {
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let spec = BoundarySpec::tilt(&[0.3, 0.1]);
        let pot = make_potential(PotentialSpec::Perturbed { eps: 0.5 }).unwrap();
        let s = crate::disorder::sample_disorder(
            crate::disorder::ModelKind::A,
            &bx,
            crate::disorder::DisorderLaw::Gaussian { sigma: 0.5 },
            5,
        )
        .unwrap();
        let model = GibbsModel::with_site_fields(pot, s.fields.unwrap());
        let mut f = HeightField::new(bx.clone(), &spec).unwrap();
        let mut rng = stream_rng(1, Stream::InitialCondition, 0);
        f.fill_free(|_| rng.sample::<f64, _>(StandardNormal));
        let (free, d) = model.drift(&f).unwrap();
        let h = 1e-5;
        for (l, &idx) in free.iter().enumerate() {
            let c = bx.site_coord(idx);
            let mut fp = f.clone();
            fp.set(&c, f.value(&c).unwrap() + h).unwrap();
            let mut fm = f.clone();
            fm.set(&c, f.value(&c).unwrap() - h).unwrap();
            let fd = -(model.energy(&fp).unwrap() - model.energy(&fm).unwrap()) / (2.0 * h);
            assert!((fd - d[l]).abs() <= 1e-6, "site {c:?}: {fd} vs {}", d[l]);
        }
    }

    #[test]
    fn noiseless_single_site_decays_geometrically() {
        // phi_{n+1} = (1 - 2h) phi_n
        let mut f = single_site_field();
        f.set(&coord_from(&[0]), 1.0).unwrap();
        let m = quad_model(1.0);
        let h = 0.05;
        let mut rng = stream_rng(0, Stream::Chain, 0);
        let mut want = 1.0;
        for _ in 0..50 {
            langevin_step(&m, &mut f, h, &mut rng, NoiseMode::Off).unwrap();
            want *= 1.0 - 2.0 * h;
            let got = f.value(&coord_from(&[0])).unwrap();
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_site_longrun_variance() {
        // stationary variance of the free site is 1/2 (precision 2) up to
        // O(h) discretization bias
        let f = single_site_field();
        let m = quad_model(1.0);
        let cfg = SamplerConfig {
            step_h: 0.01,
            burn_in_time: 20.0,
            thin_time: 1.0,
            samples: 4000,
            guard: DEFAULT_GUARD,
            noise: NoiseMode::Standard,
        };
        let mut rng = stream_rng(2024, Stream::Chain, 0);
        let mut acc = crate::stats::BatchMeans::new(32);
        let origin = coord_from(&[0]);
        run_sampler(&m, f, &cfg, &mut rng, |fld| {
            let v = fld.value(&origin).unwrap();
            acc.push(v * v);
        })
        .unwrap();
        let got = acc.mean();
        let se = acc.stderr();
        assert!((got - 0.5).abs() <= 3.0 * se + 0.01, "var {got} +- {se}");
    }

    #[test]
    fn zero_temperature_converges_to_minimizer() {
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let pot = make_potential(PotentialSpec::Perturbed { eps: 0.5 }).unwrap();
        let model = GibbsModel::homogeneous(pot);
        let mut f = HeightField::new(bx, &BoundarySpec::tilt(&[0.4, 0.0])).unwrap();
        let mut rng = stream_rng(3, Stream::InitialCondition, 1);
        f.fill_free(|_| rng.sample::<f64, _>(StandardNormal));
        let mut dynamics = Dynamics::new(&model, f).unwrap();
        for _ in 0..4000 {
            dynamics.step(0.02, &mut rng, NoiseMode::Off).unwrap();
        }
        assert!(dynamics.drift_norm() < 1e-8);
    }

    #[test]
    fn divergence_guard_fires() {
        let mut f = single_site_field();
        f.set(&coord_from(&[0]), 1.0).unwrap();
        let m = quad_model(1.0);
        let mut rng = stream_rng(0, Stream::Chain, 1);
        // wildly unstable step
        let mut dynamics = Dynamics::new(&m, f).unwrap();
        dynamics.set_guard(1e4);
        let mut failed = false;
        for _ in 0..200 {
            if dynamics.step(5.0, &mut rng, NoiseMode::Off).is_err() {
                failed = true;
                break;
            }
        }
        assert!(failed);
    }

    #[test]
    fn mixture_runs_behind_explicit_schedule() {
        // exploratory potential: no derived defaults, but the dynamics runs
        let pot = make_potential(PotentialSpec::Mixture {
            p: 0.5,
            kappa1: 1.0,
            kappa2: 4.0,
        })
        .unwrap();
        let model = GibbsModel::homogeneous(pot);
        assert!(SamplerConfig::defaults(&model, 1, 3).is_err());
        let f = single_site_field();
        let cfg = SamplerConfig {
            step_h: 0.01,
            burn_in_time: 5.0,
            thin_time: 0.5,
            samples: 50,
            guard: DEFAULT_GUARD,
            noise: NoiseMode::Standard,
        };
        let mut rng = stream_rng(6, Stream::Chain, 2);
        let (samples, diag) = equilibrate_and_sample(&model, f, &cfg, &mut rng).unwrap();
        assert_eq!(samples.len(), 50);
        assert_eq!(diag.energy_trace.len(), 50);
        assert!(diag.energy_autocorr.is_finite());
    }

    #[test]
    fn stationarity_from_exact_start() {
        // starting from an exact Gaussian sample, one step changes the mean
        // energy by O(h)
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let m = quad_model(1.0);
        let g = crate::gaussian::GaussianModel::build(
            bx.clone(),
            1.0,
            None,
            None,
            &BoundarySpec::zero(),
        )
        .unwrap();
        let h = 0.002;
        let mut rng = stream_rng(77, Stream::Chain, 5);
        let mut before = crate::stats::MomentAccumulator::new();
        let mut after = crate::stats::MomentAccumulator::new();
        for _ in 0..2000 {
            let mut f = g.sample(&mut rng).unwrap();
            before.push(m.energy(&f).unwrap());
            langevin_step(&m, &mut f, h, &mut rng, NoiseMode::Standard).unwrap();
            after.push(m.energy(&f).unwrap());
        }
        let drift = after.mean() - before.mean();
        let se = (before.stderr().powi(2) + after.stderr().powi(2)).sqrt();
        // energy drift per step is O(h * free sites) small
        assert!(drift.abs() <= 3.0 * se + 0.5, "drift {drift} se {se}");
    }
}
