//! Gradient (bond-difference) configurations: extraction from heights,
//! plaquette validation, height reconstruction along chains, the weighted
//! gradient norm, and spatial averaging of bond observables over shifted
//! volumes.
//!
//! A gradient field stores one value per positively oriented bond with an
//! endpoint in the box; the antisymmetric extension `eta(-b) = -eta(b)` is
//! applied on access. A field derived from heights satisfies the plaquette
//! condition (the signed sum around every unit square vanishes), which is
//! exactly the condition for chain-independent reconstruction.

use crate::error::{Error, Result};
use crate::field::{BoundarySpec, HeightField};
use crate::gibbs::{run_sampler, GibbsModel, SamplerConfig};
use crate::lattice::{sup_norm, Bond, Coord, LatticeBox, SiteIdx};
use crate::rng::{stream_rng, Stream};
use crate::stats::MomentAccumulator;
use rayon::prelude::*;
use std::sync::Arc;

/// Relative tolerance for the plaquette condition.
pub const PLAQUETTE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GradientField {
    bx: Arc<LatticeBox>,
    /// Indexed by `(site, axis)` over all box sites; only slots whose bond
    /// has an endpoint in the interior are meaningful.
    values: Vec<f64>,
}

impl GradientField {
    pub fn zeros(bx: Arc<LatticeBox>) -> GradientField {
        let n = bx.total_sites() * bx.dim();
        GradientField {
            bx,
            values: vec![0.0; n],
        }
    }

    pub fn boxref(&self) -> &Arc<LatticeBox> {
        &self.bx
    }

    fn slot(&self, tail: &Coord, axis: usize) -> Option<usize> {
        self.bx
            .site_index(tail)
            .map(|i| i as usize * self.bx.dim() + axis)
    }

    /// `eta(b)` for a directed bond; antisymmetric in the orientation.
    pub fn eta(&self, bond: &Bond) -> Result<f64> {
        let dim = self.bx.dim();
        let ax = bond.axis(dim);
        let (tail, sign) = if bond.is_canonical(dim) {
            (bond.tail, 1.0)
        } else {
            (bond.head, -1.0)
        };
        let slot = self
            .slot(&tail, ax)
            .ok_or_else(|| Error::OutOfDomain(tail[..dim].to_vec()))?;
        Ok(sign * self.values[slot])
    }

    /// Value on the canonical bond `(tail, tail + e_axis)`.
    pub fn canonical(&self, tail: &Coord, axis: usize) -> Result<f64> {
        let slot = self
            .slot(tail, axis)
            .ok_or_else(|| Error::OutOfDomain(tail[..self.bx.dim()].to_vec()))?;
        Ok(self.values[slot])
    }

    pub fn set_canonical(&mut self, tail: &Coord, axis: usize, v: f64) -> Result<()> {
        let slot = self
            .slot(tail, axis)
            .ok_or_else(|| Error::OutOfDomain(tail[..self.bx.dim()].to_vec()))?;
        self.values[slot] = v;
        Ok(())
    }

    /// Worst plaquette residual relative to the field scale.
    pub fn worst_plaquette(&self) -> (f64, Coord, usize, usize) {
        let dim = self.bx.dim();
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |a, &b| a.max(b.abs()))
            .max(1.0);
        let mut worst = (0.0, [0i32; crate::lattice::MAX_DIM], 0, 1);
        for p in self.bx.plaquettes() {
            let mut sum = 0.0;
            let mut ok = true;
            for b in &p.bonds {
                match self.eta(b) {
                    Ok(v) => sum += v,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let rel = sum.abs() / scale;
                if rel > worst.0 {
                    let base = p.bonds[0].tail;
                    let a = p.bonds[0].axis(dim);
                    let b = p.bonds[1].axis(dim);
                    worst = (rel, base, a, b);
                }
            }
        }
        worst
    }

    /// Check the plaquette condition within the crate tolerance.
    pub fn validate_plaquettes(&self) -> Result<()> {
        let (rel, base, a, b) = self.worst_plaquette();
        if rel > PLAQUETTE_TOL {
            return Err(Error::PlaquetteViolation {
                base: base[..self.bx.dim()].to_vec(),
                axis_a: a,
                axis_b: b,
                residual: rel,
            });
        }
        Ok(())
    }

    /// The shift `tau_v eta`.
    pub fn shifted(&self, v: &[i32]) -> GradientField {
        let bx = Arc::new(self.bx.shifted(v));
        let dim = bx.dim();
        let mut out = GradientField::zeros(bx.clone());
        for idx in 0..bx.total_sites() as SiteIdx {
            let c = bx.site_coord(idx);
            let mut base = c;
            for i in 0..dim {
                base[i] -= v[i];
            }
            let old = self.bx.site_index(&base).expect("congruent boxes");
            for ax in 0..dim {
                out.values[idx as usize * dim + ax] = self.values[old as usize * dim + ax];
            }
        }
        out
    }
}

/// `eta(b) = phi(head) - phi(tail)` on every stored bond.
pub fn gradient_of(field: &HeightField) -> GradientField {
    let bx = field.boxref().clone();
    let dim = bx.dim();
    let mut out = GradientField::zeros(bx.clone());
    let vals = field.values();
    for idx in 0..bx.total_sites() as SiteIdx {
        let c = bx.site_coord(idx);
        for ax in 0..dim {
            let mut head = c;
            head[ax] += 1;
            if let Some(h) = bx.site_index(&head) {
                out.values[idx as usize * dim + ax] = vals[h as usize] - vals[idx as usize];
            }
        }
    }
    out
}

/// Which chain `reconstruct` walks; both must agree on valid fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainOrder {
    /// Axis-by-axis staircase: move along e_1, then e_2, ...
    AxisMajor,
    /// The reverse staircase: e_d first.
    AxisMinor,
}

/// Rebuild heights from a gradient configuration by telescoping along a
/// deterministic staircase chain anchored at the box center, where the
/// height is set to `phi0`. Refuses fields violating the plaquette
/// condition, which is what makes the result chain-independent.
pub fn reconstruct(eta: &GradientField, phi0: f64, order: ChainOrder) -> Result<HeightField> {
    eta.validate_plaquettes()?;
    reconstruct_unchecked(eta, phi0, order)
}

fn reconstruct_unchecked(eta: &GradientField, phi0: f64, order: ChainOrder) -> Result<HeightField> {
    let bx = eta.bx.clone();
    let dim = bx.dim();
    let mut out = HeightField::new(bx.clone(), &BoundarySpec::zero())?;
    let anchor = *bx.offset();
    let axes: Vec<usize> = match order {
        ChainOrder::AxisMajor => (0..dim).collect(),
        ChainOrder::AxisMinor => (0..dim).rev().collect(),
    };
    let total = bx.total_sites();
    let mut vals = vec![0.0; total];
    for idx in 0..total as SiteIdx {
        let target = bx.site_coord(idx);
        let mut phi = phi0;
        let mut cur = anchor;
        for &ax in &axes {
            while cur[ax] != target[ax] {
                let step = (target[ax] - cur[ax]).signum();
                let mut next = cur;
                next[ax] += step;
                let bond = Bond {
                    tail: cur,
                    head: next,
                };
                phi += eta.eta(&bond)?;
                cur = next;
            }
        }
        vals[idx as usize] = phi;
    }
    out.values_mut().copy_from_slice(&vals);
    Ok(out)
}

/// Weighted squared distance `sum_b w(b) (eta1(b) - eta2(b))^2` over directed
/// bonds, with weight `exp(-2 r ||tail||)` of the canonical orientation
/// applied to both orientations (sup-norm).
pub fn weighted_distance(eta1: &GradientField, eta2: &GradientField, r: f64) -> Result<f64> {
    let bx = &eta1.bx;
    if bx.dim() != eta2.bx.dim()
        || bx.half_side() != eta2.bx.half_side()
        || bx.offset() != eta2.bx.offset()
    {
        return Err(Error::ShapeMismatch(
            "weighted distance needs a common box".into(),
        ));
    }
    let dim = bx.dim();
    let mut total = 0.0;
    for bond in bx.canonical_bonds() {
        let ax = bond.axis(dim);
        let d = eta1.canonical(&bond.tail, ax)? - eta2.canonical(&bond.tail, ax)?;
        let w = (-2.0 * r * sup_norm(&bond.tail, dim) as f64).exp();
        // both orientations carry the same weight
        total += 2.0 * w * d * d;
    }
    Ok(total)
}

/// Configuration for one spatially-averaged observable estimate.
#[derive(Debug, Clone)]
pub struct SpatialAverageConfig {
    pub sampler: SamplerConfig,
    pub master_seed: u64,
}

/// Estimate of `F` under the spatially-averaged ensemble: for each shift `x`
/// the same quenched disorder is held fixed while the volume `Λ + x` (and
/// its boundary condition) moves; each shifted volume runs an independent
/// chain with a seed derived from `(master seed, shift index)`.
///
/// `make_model` materializes the disorder window for a given shifted box;
/// `boundary` is evaluated at absolute coordinates, so a tilted plane moves
/// consistently with the volume.
pub fn spatial_average_observable(
    base_box: &LatticeBox,
    shifts: &[Vec<i32>],
    boundary: &BoundarySpec,
    make_model: &(dyn Fn(&LatticeBox) -> Result<GibbsModel> + Sync),
    observable: &(dyn Fn(&GradientField) -> f64 + Sync),
    cfg: &SpatialAverageConfig,
) -> Result<(f64, f64)> {
    if shifts.is_empty() {
        return Err(Error::InvalidParameter("empty shift list".into()));
    }
    let per_shift: Vec<Result<MomentAccumulator>> = shifts
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let bx = Arc::new(base_box.shifted(v));
            let model = make_model(&bx)?;
            let field0 = HeightField::new(bx.clone(), boundary)?;
            let mut rng = stream_rng(cfg.master_seed, Stream::Shift, i as u64);
            let mut acc = MomentAccumulator::new();
            run_sampler(&model, field0, &cfg.sampler, &mut rng, |f| {
                acc.push(observable(&gradient_of(f)));
            })?;
            Ok(acc)
        })
        .collect();
    let mut mean = 0.0;
    let mut var = 0.0;
    for acc in per_shift {
        let acc = acc?;
        mean += acc.mean();
        var += acc.stderr().powi(2);
    }
    let k = shifts.len() as f64;
    Ok((mean / k, var.sqrt() / k))
}

/// Cesàro average over a sequence of window half-sides: for each `m` the
/// estimate averages over all shifts in `Λ_m`, then the outer mean is taken
/// along the sequence.
pub fn cesaro_average_observable(
    base_box: &LatticeBox,
    window_half_sides: &[i32],
    boundary: &BoundarySpec,
    make_model: &(dyn Fn(&LatticeBox) -> Result<GibbsModel> + Sync),
    observable: &(dyn Fn(&GradientField) -> f64 + Sync),
    cfg: &SpatialAverageConfig,
) -> Result<(f64, f64)> {
    if window_half_sides.is_empty() {
        return Err(Error::InvalidParameter("empty volume sequence".into()));
    }
    let mut mean = 0.0;
    let mut var = 0.0;
    for (j, &m) in window_half_sides.iter().enumerate() {
        let shift_box = crate::lattice::build_box(base_box.dim(), m, &vec![0; base_box.dim()])?;
        let shifts: Vec<Vec<i32>> = shift_box
            .interior_iter()
            .map(|c| c[..base_box.dim()].to_vec())
            .collect();
        let sub = SpatialAverageConfig {
            sampler: cfg.sampler.clone(),
            master_seed: crate::rng::derive(cfg.master_seed, Stream::Shift, j as u64),
        };
        let (m_j, se_j) =
            spatial_average_observable(base_box, &shifts, boundary, make_model, observable, &sub)?;
        mean += m_j;
        var += se_j * se_j;
    }
    let k = window_half_sides.len() as f64;
    Ok((mean / k, var.sqrt() / k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_box, coord_from};
    use crate::potential::{make_potential, PotentialSpec};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_heights(bx: &Arc<LatticeBox>, seed: u64, scale: f64) -> HeightField {
        let mut f = HeightField::new(bx.clone(), &BoundarySpec::zero()).unwrap();
        let mut rng = stream_rng(seed, Stream::InitialCondition, 0);
        let vals = f.values_mut();
        for v in vals.iter_mut() {
            *v = scale * rng.sample::<f64, _>(StandardNormal);
        }
        f
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let mut f = HeightField::new(bx.clone(), &BoundarySpec::zero()).unwrap();
        for v in f.values_mut() {
            *v = 3.7;
        }
        let g = gradient_of(&f);
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plane_has_constant_gradient() {
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let mut f = HeightField::new(bx.clone(), &BoundarySpec::tilt(&[0.5, -1.0])).unwrap();
        f.fill_free(|c| 0.5 * c[0] as f64 - c[1] as f64);
        let g = gradient_of(&f);
        let b = Bond::new(coord_from(&[0, 0]), coord_from(&[1, 0]), 2).unwrap();
        assert!((g.eta(&b).unwrap() - 0.5).abs() < 1e-14);
        let b = Bond::new(coord_from(&[1, 0]), coord_from(&[1, 1]), 2).unwrap();
        assert!((g.eta(&b).unwrap() + 1.0).abs() < 1e-14);
        // reversal antisymmetry
        assert_eq!(g.eta(&b).unwrap(), -g.eta(&b.reversed()).unwrap());
    }

    #[test]
    fn plaquette_sums_vanish_for_height_gradients() {
        let bx = Arc::new(build_box(3, 2, &[0, 0, 0]).unwrap());
        let f = random_heights(&bx, 9, 100.0);
        let g = gradient_of(&f);
        let (rel, ..) = g.worst_plaquette();
        assert!(rel < 1e-12, "worst {rel}");
    }

    #[test]
    fn round_trip_is_identity() {
        let bx = Arc::new(build_box(2, 3, &[1, -2]).unwrap());
        let f = random_heights(&bx, 10, 1000.0);
        let g = gradient_of(&f);
        let anchor = *bx.offset();
        let phi0 = f.value(&anchor).unwrap();
        let back = reconstruct(&g, phi0, ChainOrder::AxisMajor).unwrap();
        for idx in 0..bx.total_sites() as u32 {
            let a = f.values()[idx as usize];
            let b = back.values()[idx as usize];
            assert!((a - b).abs() < 1e-12, "site {idx}: {a} vs {b}");
        }
    }

    #[test]
    fn chains_agree_on_valid_fields() {
        let bx = Arc::new(build_box(3, 2, &[0, 0, 0]).unwrap());
        for seed in 0..10 {
            let f = random_heights(&bx, seed, 10.0);
            let g = gradient_of(&f);
            let a = reconstruct(&g, 0.0, ChainOrder::AxisMajor).unwrap();
            let b = reconstruct(&g, 0.0, ChainOrder::AxisMinor).unwrap();
            let worst = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            assert!(worst <= 1e-9, "seed {seed}: {worst}");
        }
    }

    #[test]
    fn perturbed_plaquette_is_refused() {
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let f = random_heights(&bx, 11, 1.0);
        let mut g = gradient_of(&f);
        let tail = coord_from(&[0, 0]);
        let old = g.canonical(&tail, 0).unwrap();
        g.set_canonical(&tail, 0, old + 1e-3).unwrap();
        match reconstruct(&g, 0.0, ChainOrder::AxisMajor) {
            Err(Error::PlaquetteViolation { residual, .. }) => {
                assert!(residual > PLAQUETTE_TOL);
            }
            other => panic!("expected plaquette violation, got {other:?}"),
        }
    }

    #[test]
    fn tilt_covariance_of_gradient() {
        // gradient_of(phi + u . x) = gradient_of(phi) + constant tilt field
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let f = random_heights(&bx, 12, 1.0);
        let u = [0.3, -0.6];
        let mut fu = f.clone();
        for idx in 0..bx.total_sites() as u32 {
            let c = bx.site_coord(idx);
            fu.values_mut()[idx as usize] += u[0] * c[0] as f64 + u[1] * c[1] as f64;
        }
        let g = gradient_of(&f);
        let gu = gradient_of(&fu);
        for bond in bx.canonical_bonds() {
            let ax = bond.axis(2);
            let got = gu.canonical(&bond.tail, ax).unwrap();
            let want = g.canonical(&bond.tail, ax).unwrap() + u[ax];
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_distance_basics() {
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let f = random_heights(&bx, 13, 1.0);
        let g1 = gradient_of(&f);
        let g2 = g1.clone();
        assert_eq!(weighted_distance(&g1, &g2, 0.5).unwrap(), 0.0);

        // single differing bond at the origin with gap 1 contributes
        // e^0 * 1 for both orientations -> 2
        let mut g3 = g1.clone();
        let tail = coord_from(&[0, 0]);
        let old = g3.canonical(&tail, 0).unwrap();
        g3.set_canonical(&tail, 0, old + 1.0).unwrap();
        for r in [0.1, 0.7, 2.0] {
            let d = weighted_distance(&g1, &g3, r).unwrap();
            assert!((d - 2.0).abs() < 1e-12, "r={r}: {d}");
        }

        // monotone nonincreasing in r
        let mut g4 = g1.clone();
        let t2 = coord_from(&[1, -1]);
        let old = g4.canonical(&t2, 1).unwrap();
        g4.set_canonical(&t2, 1, old + 0.5).unwrap();
        let d1 = weighted_distance(&g1, &g4, 0.2).unwrap();
        let d2 = weighted_distance(&g1, &g4, 0.8).unwrap();
        assert!(d2 <= d1);
    }

    #[test]
    fn spatial_average_exact_tilt() {
        // quadratic, no disorder, tilt u: per-shift mean gradient is exactly
        // u along the first axis; the MC average stays within error bars
        let bx = build_box(2, 2, &[0, 0]).unwrap();
        let pot = make_potential(PotentialSpec::Quadratic { kappa: 1.0 }).unwrap();
        let boundary = BoundarySpec::tilt(&[0.4, 0.0]);
        let cfg = SpatialAverageConfig {
            sampler: SamplerConfig {
                step_h: 0.02,
                burn_in_time: 30.0,
                thin_time: 2.0,
                samples: 200,
                guard: crate::gibbs::DEFAULT_GUARD,
                noise: crate::gibbs::NoiseMode::Standard,
            },
            master_seed: 99,
        };
        let shifts = vec![vec![0, 0], vec![1, 0], vec![-1, 2]];
        let origin_bond = move |g: &GradientField| {
            // bond at the shifted box's center: use absolute origin shifted
            g.canonical(g.boxref().offset(), 0).unwrap()
        };
        let (est, se) = spatial_average_observable(
            &bx,
            &shifts,
            &boundary,
            &|_| Ok(GibbsModel::homogeneous(pot)),
            &origin_bond,
            &cfg,
        )
        .unwrap();
        assert!((est - 0.4).abs() <= 4.0 * se + 1e-3, "est {est} se {se}");
        // empty shift list errors
        assert!(spatial_average_observable(
            &bx,
            &[],
            &boundary,
            &|_| Ok(GibbsModel::homogeneous(pot)),
            &origin_bond,
            &cfg,
        )
        .is_err());
    }
}
