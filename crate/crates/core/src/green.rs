//! Discrete Green functions: exact killed-walk tables, their asymptotics,
//! the continuous-time walk in a (possibly time-dependent) conductance
//! environment, and gradient-decay diagnostics.
//!
//! Normalization is the single most common source of factor-of-2d bugs, so
//! every table carries an explicit tag:
//!
//! * `DiscreteTimeVisits` — expected visit counts of the embedded discrete
//!   walk killed outside the domain, `(I - P)^{-1}`;
//! * `ContinuousTimeOccupation` — expected occupation time of the
//!   rate-`a_b` continuous-time walk, `L_a^{-1}`;
//! * `PrecisionInverse` — `A^{-1}` of the Gaussian model with the same bond
//!   weights, numerically identical to the occupation table.
//!
//! For a homogeneous rate `kappa` the conversion is `visits = occupation *
//! 2 d kappa`, checked entrywise in the tests.

use crate::disorder::BondField;
use crate::error::{Error, Result};
use crate::field::HeightField;
use crate::gibbs::GibbsModel;
use crate::lattice::{euclid_norm, Coord, Domain, NOT_FREE};
use crate::solver::{LatticeSystem, CG_TOL, DENSE_LIMIT};
use crate::stats::{linear_fit, LinearFit, MomentAccumulator};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    DiscreteTimeVisits,
    ContinuousTimeOccupation,
    PrecisionInverse,
}

enum Backing {
    /// Dense Cholesky factor; columns solved against it on demand.
    Factor(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    /// Iterative column solves with a cache.
    Columns,
}

/// An exact Green table over the free sites of a domain.
pub struct GreenTable {
    system: LatticeSystem,
    normalization: Normalization,
    /// Homogeneous bond rate when one exists; enables visit-normalization.
    homogeneous_rate: Option<f64>,
    backing: Backing,
    cache: Mutex<HashMap<u32, Arc<Vec<f64>>>>,
}

impl GreenTable {
    /// Exact table for the walk with bond rates `kappa0 * conductance`.
    /// Small domains get a dense inverse; larger ones solve columns on
    /// demand (CG, relative tolerance 1e-10).
    pub fn build(
        domain: Arc<Domain>,
        conductances: Option<&BondField>,
        kappa0: f64,
        normalization: Normalization,
    ) -> Result<GreenTable> {
        let homogeneous_rate = if conductances.is_none() {
            Some(kappa0)
        } else {
            None
        };
        let system = LatticeSystem::assemble(domain, conductances, kappa0);
        let backing = if system.size() <= DENSE_LIMIT {
            Backing::Factor(system.cholesky()?)
        } else {
            Backing::Columns
        };
        Ok(GreenTable {
            system,
            normalization,
            homogeneous_rate,
            backing,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.system.domain()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Multiplier converting the raw occupation solve to this table's tag.
    fn scale(&self) -> Result<f64> {
        match self.normalization {
            Normalization::ContinuousTimeOccupation | Normalization::PrecisionInverse => Ok(1.0),
            Normalization::DiscreteTimeVisits => {
                let kappa = self.homogeneous_rate.ok_or_else(|| {
                    Error::Unsupported("visit normalization needs a homogeneous rate".into())
                })?;
                Ok(2.0 * self.system.dim() as f64 * kappa)
            }
        }
    }

    /// Same table under a different normalization tag.
    pub fn with_normalization(mut self, normalization: Normalization) -> GreenTable {
        self.normalization = normalization;
        self
    }

    /// Raw occupation column of `z` over local indices.
    pub fn occupation_column(&self, z: &Coord) -> Result<Arc<Vec<f64>>> {
        let lz = self
            .domain()
            .local_index(z)
            .ok_or_else(|| Error::OutOfDomain(z[..self.system.dim()].to_vec()))?;
        if let Some(col) = self.cache.lock().unwrap().get(&lz) {
            return Ok(col.clone());
        }
        let mut e = vec![0.0; self.system.size()];
        e[lz as usize] = 1.0;
        let col = Arc::new(match &self.backing {
            Backing::Factor(chol) => chol
                .solve(&nalgebra::DVector::from_column_slice(&e))
                .as_slice()
                .to_vec(),
            Backing::Columns => self.system.solve_cg(&e, CG_TOL)?,
        });
        self.cache.lock().unwrap().insert(lz, col.clone());
        Ok(col)
    }

    /// `G(x, z)` in the table's normalization; zero off the free set.
    pub fn entry(&self, x: &Coord, z: &Coord) -> Result<f64> {
        let lx = match self.domain().local_index(x) {
            Some(l) => l,
            None => return Ok(0.0),
        };
        if self.domain().local_index(z).is_none() {
            return Ok(0.0);
        }
        let col = self.occupation_column(z)?;
        Ok(self.scale()? * col[lx as usize])
    }

    pub fn system(&self) -> &LatticeSystem {
        &self.system
    }
}

/// Exact simple-random-walk Green table (visit normalization, unit rates).
pub fn srw_green_exact(domain: Arc<Domain>) -> Result<GreenTable> {
    GreenTable::build(domain, None, 1.0, Normalization::DiscreteTimeVisits)
}

/// `G_{B_N}(0, 0)` in visit normalization over a list of ball radii.
pub fn green_center_growth(dim: usize, radii: &[i32]) -> Result<Vec<f64>> {
    let origin = [0i32; crate::lattice::MAX_DIM];
    radii
        .iter()
        .map(|&n| {
            let domain = Arc::new(Domain::ball(dim, n)?);
            let table = srw_green_exact(domain)?;
            table.entry(&origin, &origin)
        })
        .collect()
}

/// Piecewise-constant-in-time bond rates `a(t, b)` for the walk coupled to
/// the fluctuating gradient field.
pub struct DynamicEnvironment {
    system: LatticeSystem,
    /// Slice start times, increasing from 0; the last slice is frozen
    /// forever.
    starts: Vec<f64>,
    /// Per slice, per (free site, slot) jump rate.
    rates: Vec<Vec<f64>>,
}

impl DynamicEnvironment {
    /// Time-independent environment with rates `kappa0 * conductance`.
    pub fn static_environment(
        domain: Arc<Domain>,
        conductances: Option<&BondField>,
        kappa0: f64,
    ) -> DynamicEnvironment {
        let system = LatticeSystem::assemble(domain, conductances, kappa0);
        let (_, weights, _) = system.adjacency();
        let rates = vec![weights.to_vec()];
        DynamicEnvironment {
            system,
            starts: vec![0.0],
            rates,
        }
    }

    /// Environment sampled from dynamics snapshots at spacing `dt`:
    /// `a(t, b) = kappa_b V''(grad phi_t(b))`, held constant on
    /// `[i dt, (i+1) dt)` and frozen after the last snapshot.
    pub fn from_snapshots(
        model: &GibbsModel,
        domain: Arc<Domain>,
        snapshots: &[HeightField],
        dt: f64,
    ) -> Result<DynamicEnvironment> {
        if snapshots.is_empty() {
            return Err(Error::InvalidParameter("no snapshots".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(
                "snapshot spacing must be positive".into(),
            ));
        }
        let system = LatticeSystem::assemble(domain, model.conductances.as_ref(), 1.0);
        let (nbr_local, weights, slots) = {
            let (a, b, c) = system.adjacency();
            (a.to_vec(), b.to_vec(), c)
        };
        let globals = system.neighbor_globals().to_vec();
        let _ = nbr_local;
        let mut starts = Vec::with_capacity(snapshots.len());
        let mut rates = Vec::with_capacity(snapshots.len());
        for (i, snap) in snapshots.iter().enumerate() {
            let vals = snap.values();
            let mut slice = vec![0.0; weights.len()];
            for l in 0..system.size() {
                let c = system.domain().coord_of_local(l as u32);
                let g = snap.boxref().site_index(&c).ok_or_else(|| {
                    Error::ShapeMismatch("snapshot box does not host the domain".into())
                })?;
                let phi = vals[g as usize];
                for s in 0..slots {
                    let gn = globals[l * slots + s];
                    if gn == u32::MAX {
                        slice[l * slots + s] = weights[l * slots + s] * model.potential.d2v(0.0);
                        continue;
                    }
                    let dphi = vals[gn as usize] - phi;
                    slice[l * slots + s] = weights[l * slots + s] * model.potential.d2v(dphi);
                }
            }
            starts.push(i as f64 * dt);
            rates.push(slice);
        }
        Ok(DynamicEnvironment {
            system,
            starts,
            rates,
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.system.domain()
    }

    pub fn is_dynamic(&self) -> bool {
        self.starts.len() > 1
    }

    /// Ellipticity window of the stored rates.
    pub fn rate_window(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for slice in &self.rates {
            for &r in slice {
                if r > 0.0 {
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
        }
        (lo, hi)
    }

    /// An exact occupation table for one frozen slice; diagnostics use the
    /// final slice as the static proxy.
    pub fn frozen_slice_table(&self, slice: usize) -> Result<GreenTable> {
        let slice = slice.min(self.rates.len() - 1);
        // rebuild a system whose weights are the slice rates
        let system = self.system.clone_with_weights(&self.rates[slice]);
        let backing = if system.size() <= DENSE_LIMIT {
            Backing::Factor(system.cholesky()?)
        } else {
            Backing::Columns
        };
        Ok(GreenTable {
            system,
            normalization: Normalization::ContinuousTimeOccupation,
            homogeneous_rate: None,
            backing,
            cache: Mutex::new(HashMap::new()),
        })
    }
}

/// Monte Carlo estimate of the killed-walk occupation time `g(x, z)`.
#[derive(Debug, Clone, Copy)]
pub struct HsGreenEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Fraction of walkers still alive when the recorded environment ran
    /// out (they continue in the frozen final slice).
    pub horizon_mass: f64,
    pub walkers: usize,
}

/// Simulate `walkers` continuous-time walks from `x`, jumping across bond
/// `b` at the instantaneous rate `a(t, b)`, killed on exiting the domain;
/// accumulate the time spent at `z`.
pub fn hs_walk_green(
    env: &DynamicEnvironment,
    x: &Coord,
    z: &Coord,
    walkers: usize,
    master_seed: u64,
) -> Result<HsGreenEstimate> {
    let dim = env.system.dim();
    let lx = env
        .domain()
        .local_index(x)
        .ok_or_else(|| Error::OutOfDomain(x[..dim].to_vec()))?;
    let lz = env
        .domain()
        .local_index(z)
        .ok_or_else(|| Error::OutOfDomain(z[..dim].to_vec()))?;
    if walkers == 0 {
        return Err(Error::InvalidParameter("need at least one walker".into()));
    }
    let (nbr_local, _, slots) = env.system.adjacency();
    let horizon = *env.starts.last().unwrap();

    let runs: Vec<(f64, bool)> = (0..walkers)
        .into_par_iter()
        .map(|w| {
            let mut rng = crate::rng::stream_rng(master_seed, crate::rng::Stream::Walker, w as u64);
            let mut t = 0.0f64;
            let mut here = lx as usize;
            let mut occupied = 0.0f64;
            let mut slice = 0usize;
            let mut crossed_horizon = false;
            loop {
                while slice + 1 < env.starts.len() && t >= env.starts[slice + 1] {
                    slice += 1;
                }
                if slice + 1 == env.starts.len() && t >= horizon && env.is_dynamic() {
                    crossed_horizon = true;
                }
                let rates = &env.rates[slice];
                let base = here * slots;
                let total: f64 = rates[base..base + slots].iter().sum();
                debug_assert!(total > 0.0);
                let hold: f64 = Exp1.sample(&mut rng);
                let tau = hold / total;
                let slice_end = if slice + 1 < env.starts.len() {
                    env.starts[slice + 1]
                } else {
                    f64::INFINITY
                };
                if t + tau >= slice_end {
                    if here == lz as usize {
                        occupied += slice_end - t;
                    }
                    t = slice_end;
                    continue;
                }
                if here == lz as usize {
                    occupied += tau;
                }
                t += tau;
                // choose the crossed bond proportionally to its rate
                let mut pick = rng.random::<f64>() * total;
                let mut chosen = slots - 1;
                for s in 0..slots {
                    pick -= rates[base + s];
                    if pick <= 0.0 {
                        chosen = s;
                        break;
                    }
                }
                let nb = nbr_local[base + chosen];
                if nb == NOT_FREE {
                    return (occupied, crossed_horizon);
                }
                here = nb as usize;
            }
        })
        .collect();

    let mut acc = MomentAccumulator::new();
    let mut beyond = 0usize;
    for &(occ, crossed) in &runs {
        acc.push(occ);
        if crossed {
            beyond += 1;
        }
    }
    let horizon_mass = beyond as f64 / walkers as f64;
    if env.is_dynamic() && horizon_mass > 0.01 {
        return Err(Error::HorizonMass { mass: horizon_mass });
    }
    Ok(HsGreenEstimate {
        value: acc.mean(),
        stderr: acc.stderr(),
        horizon_mass,
        walkers,
    })
}

/// Annulus and pointwise decay diagnostics of an exact table around `z`.
#[derive(Debug, Clone)]
pub struct GradientDiagnostics {
    /// `(R, sum over the annulus of the squared bond gradients of g)`.
    pub annulus: Vec<(f64, f64)>,
    /// Fit of `ln sum` against `ln R`.
    pub annulus_fit: LinearFit,
    /// Same for the mixed second differences in `(x, z)`.
    pub mixed: Vec<(f64, f64)>,
    pub mixed_fit: Option<LinearFit>,
    /// Fit of `ln |grad g|` against `ln |x - z|`; slope = -(decay exponent).
    pub pointwise_fit: LinearFit,
}

/// Compute the decay diagnostics of `g(., z)` over the doubling annuli
/// `R <= |x - z| <= 2R`. Edge ties belong to the lower shell: for every
/// list entry after the first the inner comparison is strict.
pub fn green_gradient_diagnostics(
    table: &GreenTable,
    z: &Coord,
    r_list: &[i32],
) -> Result<GradientDiagnostics> {
    if r_list.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two annulus radii".into(),
        ));
    }
    let dim = table.system().dim();
    let domain = table.domain().clone();
    let col_z = table.occupation_column(z)?;
    // shifted center column for the mixed differences
    let mut z_shift = *z;
    z_shift[1 % dim] += 1;
    let col_zs = table.occupation_column(&z_shift).ok();

    let grad = |col: &[f64], l: u32, ax: usize| -> Option<f64> {
        let c = domain.coord_of_local(l);
        let mut n = c;
        n[ax] += 1;
        let g_here = col[l as usize];
        let g_next = match domain.local_index(&n) {
            Some(ln) => col[ln as usize],
            None => 0.0,
        };
        Some(g_next - g_here)
    };

    let mut annulus = Vec::new();
    let mut mixed = Vec::new();
    for (k, &r) in r_list.iter().enumerate() {
        let lo = r as f64;
        let hi = 2.0 * r as f64;
        let mut sum = 0.0;
        let mut sum_mixed = 0.0;
        for l in 0..domain.free_count() as u32 {
            let c = domain.coord_of_local(l);
            let mut d = c;
            for i in 0..dim {
                d[i] -= z[i];
            }
            let dist = euclid_norm(&d, dim);
            let inside = if k == 0 {
                dist >= lo && dist <= hi
            } else {
                dist > lo && dist <= hi
            };
            if !inside {
                continue;
            }
            for ax in 0..dim {
                if let Some(g) = grad(&col_z, l, ax) {
                    sum += g * g;
                }
                if let Some(cs) = &col_zs {
                    if let (Some(a), Some(b)) = (grad(&col_z, l, ax), grad(cs, l, ax)) {
                        let m = b - a;
                        sum_mixed += m * m;
                    }
                }
            }
        }
        annulus.push((r as f64, sum));
        if col_zs.is_some() {
            mixed.push((r as f64, sum_mixed));
        }
    }
    let positive: Vec<(f64, f64)> = annulus.iter().copied().filter(|&(_, s)| s > 0.0).collect();
    if positive.len() < 2 {
        return Err(Error::InvalidParameter(
            "insufficient annuli with data".into(),
        ));
    }
    let xs: Vec<f64> = positive.iter().map(|&(r, _)| r.ln()).collect();
    let ys: Vec<f64> = positive.iter().map(|&(_, s)| s.ln()).collect();
    let annulus_fit = linear_fit(&xs, &ys)?;

    let mixed_fit = if mixed.iter().all(|&(_, s)| s > 0.0) && mixed.len() >= 2 {
        let xs: Vec<f64> = mixed.iter().map(|&(r, _)| r.ln()).collect();
        let ys: Vec<f64> = mixed.iter().map(|&(_, s)| s.ln()).collect();
        linear_fit(&xs, &ys).ok()
    } else {
        None
    };

    // pointwise: |grad g| against distance over 3 <= dist <= 2 R_max
    let mut px = Vec::new();
    let mut py = Vec::new();
    let max_dist = 2.0 * *r_list.last().unwrap() as f64;
    for l in 0..domain.free_count() as u32 {
        let c = domain.coord_of_local(l);
        let mut d = c;
        for i in 0..dim {
            d[i] -= z[i];
        }
        let dist = euclid_norm(&d, dim);
        if !(3.0..=max_dist).contains(&dist) {
            continue;
        }
        if let Some(g) = grad(&col_z, l, 0) {
            if g.abs() > 0.0 {
                px.push(dist.ln());
                py.push(g.abs().ln());
            }
        }
    }
    let pointwise_fit = linear_fit(&px, &py)?;

    Ok(GradientDiagnostics {
        annulus,
        annulus_fit,
        mixed,
        mixed_fit,
        pointwise_fit,
    })
}
