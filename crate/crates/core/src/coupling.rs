//! Two-replica coupling with common noise: both height fields evolve under
//! the same Brownian increments and the same quenched disorder, so their
//! difference obeys a noiseless contraction driven by the uniform convexity
//! of the potential. The weighted gradient distance between the replicas is
//! the finite-volume stand-in for the Wasserstein contraction that yields
//! uniqueness; with frozen matching boundaries the contraction is strict
//! exponential rather than only time-averaged.

use crate::error::{Error, Result};
use crate::field::HeightField;
use crate::gibbs::{Dynamics, GibbsModel};
use crate::gradient::{gradient_of, weighted_distance};
use crate::rng::{stream_rng, Stream};
use rand::Rng;
use rand_distr::StandardNormal;

/// One recorded point of a coupled run.
#[derive(Debug, Clone, Copy)]
pub struct CouplingRow {
    pub time: f64,
    /// Weighted gradient distance `D_r` between the replicas.
    pub weighted_distance: f64,
    /// Plain squared field distance over free sites.
    pub field_distance_sq: f64,
    pub energy_a: f64,
    pub energy_b: f64,
}

#[derive(Debug, Clone)]
pub struct CouplingSeries {
    pub rows: Vec<CouplingRow>,
    pub decay_rate_weight: f64,
}

/// Evolve two replicas from `(phi0, phi0_bar)` for total time `T` with
/// shared per-site noise, recording every `record_every` steps.
///
/// Both initial fields must carry identical frozen masks and values there;
/// the replicas then agree on the frozen set forever.
pub fn coupled_run(
    model: &GibbsModel,
    phi0: HeightField,
    phi0_bar: HeightField,
    total_time: f64,
    step_h: f64,
    weight_rate: f64,
    seed: u64,
    record_every: usize,
) -> Result<CouplingSeries> {
    if !(total_time > 0.0) || !(step_h > 0.0) {
        return Err(Error::InvalidParameter(
            "coupled run needs positive T and h".into(),
        ));
    }
    check_matching(&phi0, &phi0_bar)?;
    let mut a = Dynamics::new(model, phi0)?;
    let mut b = Dynamics::new(model, phi0_bar)?;
    let steps = (total_time / step_h).ceil() as usize;
    let record_every = record_every.max(1);
    let mut rng = stream_rng(seed, Stream::CouplingNoise, 0);
    let n_free = a.free_sites().len();
    let mut noise = vec![0.0; n_free];

    let mut rows = Vec::with_capacity(steps / record_every + 2);
    let mut record = |a: &Dynamics, b: &Dynamics, t: f64| -> Result<()> {
        let ga = gradient_of(&a.field);
        let gb = gradient_of(&b.field);
        let dr = weighted_distance(&ga, &gb, weight_rate)?;
        let mut dist = 0.0;
        for &idx in a.free_sites() {
            let d = a.field.values()[idx as usize] - b.field.values()[idx as usize];
            dist += d * d;
        }
        rows.push(CouplingRow {
            time: t,
            weighted_distance: dr,
            field_distance_sq: dist,
            energy_a: model.energy(&a.field)?,
            energy_b: model.energy(&b.field)?,
        });
        Ok(())
    };

    record(&a, &b, 0.0)?;
    for step in 1..=steps {
        for g in noise.iter_mut() {
            *g = rng.sample::<f64, _>(StandardNormal);
        }
        a.step_with_noise(step_h, &noise)?;
        b.step_with_noise(step_h, &noise)?;
        if step % record_every == 0 || step == steps {
            record(&a, &b, step as f64 * step_h)?;
        }
    }
    Ok(CouplingSeries {
        rows,
        decay_rate_weight: weight_rate,
    })
}

fn check_matching(a: &HeightField, b: &HeightField) -> Result<()> {
    if a.boxref().dim() != b.boxref().dim()
        || a.boxref().half_side() != b.boxref().half_side()
        || a.boxref().offset() != b.boxref().offset()
    {
        return Err(Error::ShapeMismatch(
            "replicas live on different boxes".into(),
        ));
    }
    if a.frozen() != b.frozen() {
        return Err(Error::ShapeMismatch(
            "replicas have different frozen sets".into(),
        ));
    }
    for (i, (&f, (&va, &vb))) in a
        .frozen()
        .iter()
        .zip(a.values().iter().zip(b.values()))
        .enumerate()
    {
        if f && va != vb {
            return Err(Error::ShapeMismatch(format!(
                "frozen site {i} differs across replicas"
            )));
        }
    }
    Ok(())
}

/// Result of fitting an exponential decay rate to a distance series.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    /// Decay rate `lambda` in `D(t) ~ exp(-lambda t)`; `+inf` for an
    /// exactly-zero series.
    pub rate: f64,
    pub residual_rms: f64,
    /// Number of points in the fitting window.
    pub window: usize,
}

/// Least-squares slope of `ln D_r(t)` over the tail window: the last half of
/// the samples sitting above `100 eps` times the initial value (skip the
/// transient, stay off the rounding floor). Exactly-zero series short-circuit
/// to rate `+inf`; a non-negative slope is an error.
pub fn contraction_rate(series: &CouplingSeries) -> Result<RateFit> {
    let d0 = series
        .rows
        .first()
        .map(|r| r.weighted_distance)
        .unwrap_or(0.0);
    if series.rows.iter().all(|r| r.weighted_distance == 0.0) {
        return Ok(RateFit {
            rate: f64::INFINITY,
            residual_rms: 0.0,
            window: series.rows.len(),
        });
    }
    let floor = 100.0 * f64::EPSILON * d0.max(f64::MIN_POSITIVE);
    let usable: Vec<&CouplingRow> = series
        .rows
        .iter()
        .filter(|r| r.weighted_distance > floor)
        .collect();
    if usable.len() < 4 {
        return Err(Error::InvalidParameter(
            "too few usable points above the rounding floor".into(),
        ));
    }
    let tail = &usable[usable.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|r| r.time).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.weighted_distance.ln()).collect();
    let fit = crate::stats::linear_fit(&xs, &ys)?;
    if fit.slope >= 0.0 {
        return Err(Error::NonDecay { slope: fit.slope });
    }
    Ok(RateFit {
        rate: -fit.slope,
        residual_rms: fit.residual_rms,
        window: tail.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BoundarySpec;
    use crate::gibbs::NoiseMode;
    use crate::lattice::{build_box, coord_from};
    use crate::potential::{make_potential, PotentialSpec};
    use crate::solver::dirichlet_lambda1;
    use rand_distr::StandardNormal;
    use std::sync::Arc;

    fn quad_model(kappa: f64) -> GibbsModel {
        GibbsModel::homogeneous(make_potential(PotentialSpec::Quadratic { kappa }).unwrap())
    }

    fn random_pair(
        d: usize,
        n: i32,
        seed: u64,
    ) -> (HeightField, HeightField, Arc<crate::lattice::LatticeBox>) {
        let bx = Arc::new(build_box(d, n, &vec![0; d]).unwrap());
        let spec = BoundarySpec::zero();
        let mut a = HeightField::new(bx.clone(), &spec).unwrap();
        let mut b = HeightField::new(bx.clone(), &spec).unwrap();
        let mut rng = stream_rng(seed, Stream::InitialCondition, 0);
        a.fill_free(|_| rng.sample::<f64, _>(StandardNormal));
        b.fill_free(|_| rng.sample::<f64, _>(StandardNormal));
        (a, b, bx)
    }

    #[test]
    fn identical_starts_stay_bitwise_identical() {
        let (a, _, bx) = random_pair(2, 2, 3);
        let model = quad_model(1.0);
        let series = coupled_run(&model, a.clone(), a.clone(), 2.0, 0.02, 0.5, 9, 10).unwrap();
        for r in &series.rows {
            assert_eq!(r.weighted_distance, 0.0);
            assert_eq!(r.field_distance_sq, 0.0);
            assert_eq!(r.energy_a, r.energy_b);
        }
        let _ = bx;
        // exact-zero short-circuit
        let fit = contraction_rate(&series).unwrap();
        assert!(fit.rate.is_infinite());
    }

    #[test]
    fn single_site_difference_recurrence() {
        // delta_{n+1} = (1 - 2h) delta_n exactly: noise and xi cancel
        let bx = Arc::new(build_box(1, 1, &[0]).unwrap());
        let spec = BoundarySpec::zero_pinned(vec![vec![-1], vec![1]]);
        let mut a = HeightField::new(bx.clone(), &spec).unwrap();
        let b = HeightField::new(bx.clone(), &spec).unwrap();
        a.set(&coord_from(&[0]), 1.0).unwrap();
        let model = quad_model(1.0);
        let h = 0.05;
        let series = coupled_run(&model, a, b, 1.0, h, 0.1, 4, 1).unwrap();
        for (k, row) in series.rows.iter().enumerate() {
            let want = (1.0f64 - 2.0 * h).powi(k as i32);
            let got = row.field_distance_sq.sqrt();
            assert!((got - want).abs() < 1e-12, "step {k}: {got} vs {want}");
        }
    }

    #[test]
    fn difference_follows_matrix_recurrence() {
        // delta_{n+1} = (I - h A) delta_n for the quadratic model
        let (a, b, bx) = random_pair(2, 2, 11);
        let model = quad_model(1.0);
        let h = 0.02;
        let series = coupled_run(&model, a.clone(), b.clone(), 0.2, h, 0.5, 21, 1).unwrap();
        // oracle: dense matrix power on the free-site difference
        let domain = Arc::new(crate::lattice::Domain::interior((*bx).clone()));
        let sys = crate::solver::LatticeSystem::assemble(domain.clone(), None, 1.0);
        let mut delta: Vec<f64> = (0..domain.free_count() as u32)
            .map(|l| {
                let c = domain.coord_of_local(l);
                a.value(&c).unwrap() - b.value(&c).unwrap()
            })
            .collect();
        let mut buf = vec![0.0; delta.len()];
        for (k, row) in series.rows.iter().enumerate() {
            let norm_sq: f64 = delta.iter().map(|v| v * v).sum();
            assert!(
                (row.field_distance_sq - norm_sq).abs() <= 1e-10 * norm_sq.max(1e-300),
                "step {k}"
            );
            sys.apply(&delta, &mut buf);
            for i in 0..delta.len() {
                delta[i] -= h * buf[i];
            }
        }
    }

    #[test]
    fn quadratic_rate_matches_eigenvalue_oracle() {
        // fitted rate of D_r within 5% of 2 lambda1(A), with the O(h)
        // Euler correction folded into the oracle comparison
        let (a, b, _) = random_pair(2, 2, 17);
        let model = quad_model(1.0);
        let h = 0.01;
        let series = coupled_run(&model, a, b, 120.0, h, 0.5, 33, 20).unwrap();
        let fit = contraction_rate(&series).unwrap();
        let lam1 = dirichlet_lambda1(2, 5, 1.0);
        let want = 2.0 * lam1;
        assert!(
            (fit.rate - want).abs() <= 0.05 * want,
            "rate {} vs {want}",
            fit.rate
        );
    }

    #[test]
    fn disorder_cancels_in_the_difference() {
        // for quadratic potentials the recorded difference trajectory is
        // independent of xi up to rounding
        let (a, b, bx) = random_pair(2, 2, 23);
        let law = crate::disorder::DisorderLaw::Gaussian { sigma: 2.0 };
        let xi1 = crate::disorder::sample_disorder(crate::disorder::ModelKind::A, &bx, law, 1)
            .unwrap()
            .fields
            .unwrap();
        let xi2 = crate::disorder::sample_disorder(crate::disorder::ModelKind::A, &bx, law, 2)
            .unwrap()
            .fields
            .unwrap();
        let pot = make_potential(PotentialSpec::Quadratic { kappa: 1.0 }).unwrap();
        let m1 = GibbsModel::with_site_fields(pot, xi1);
        let m2 = GibbsModel::with_site_fields(pot, xi2);
        let s1 = coupled_run(&m1, a.clone(), b.clone(), 1.0, 0.02, 0.5, 77, 5).unwrap();
        let s2 = coupled_run(&m2, a, b, 1.0, 0.02, 0.5, 77, 5).unwrap();
        for (r1, r2) in s1.rows.iter().zip(&s2.rows) {
            let scale = r1.field_distance_sq.max(1e-300);
            assert!(
                (r1.field_distance_sq - r2.field_distance_sq).abs() <= 1e-9 * scale,
                "{} vs {}",
                r1.field_distance_sq,
                r2.field_distance_sq
            );
        }
    }

    #[test]
    fn monotone_contraction_noiseless_bound() {
        // zero-noise hook: ||delta_{n+1}|| <= (1 - h C1 lambda1) ||delta_n||
        // for uniformly convex potentials
        for (d, n) in [(1usize, 4i32), (2, 3), (2, 6)] {
            let bx = Arc::new(build_box(d, n, &vec![0; d]).unwrap());
            let spec = BoundarySpec::zero();
            let mut a = HeightField::new(bx.clone(), &spec).unwrap();
            let mut b = HeightField::new(bx.clone(), &spec).unwrap();
            let mut rng = stream_rng(5, Stream::InitialCondition, n as u64);
            a.fill_free(|_| rng.sample::<f64, _>(StandardNormal));
            b.fill_free(|_| rng.sample::<f64, _>(StandardNormal));
            let pot = make_potential(PotentialSpec::Perturbed { eps: 0.5 }).unwrap();
            let model = GibbsModel::homogeneous(pot);
            let h = 0.1 / (2.0 * d as f64 * 1.5);
            let lam1 = dirichlet_lambda1(d, (2 * n + 1) as usize, 1.0);
            let mut da = crate::gibbs::Dynamics::new(&model, a).unwrap();
            let mut db = crate::gibbs::Dynamics::new(&model, b).unwrap();
            let dist = |x: &crate::gibbs::Dynamics, y: &crate::gibbs::Dynamics| -> f64 {
                x.free_sites()
                    .iter()
                    .map(|&i| {
                        let d = x.field.values()[i as usize] - y.field.values()[i as usize];
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt()
            };
            let factor = 1.0 - h * lam1; // C1 = 1
            for step in 0..50 {
                let before = dist(&da, &db);
                da.step(h, &mut rng, NoiseMode::Off).unwrap();
                db.step(h, &mut rng, NoiseMode::Off).unwrap();
                let after = dist(&da, &db);
                assert!(
                    after <= factor * before + 1e-13,
                    "d={d} n={n} step {step}: {after} > {}",
                    factor * before
                );
            }
        }
    }

    #[test]
    fn uniqueness_proxy_tilted_ensembles() {
        // two starts drawn around the same tilt contract below 1e-3 of the
        // initial distance by T = 3 ln(1e3) / (2 C1 lambda1)
        let bx = Arc::new(build_box(2, 3, &[0, 0]).unwrap());
        let spec = BoundarySpec::tilt(&[0.3, -0.1]);
        let mut a = HeightField::new(bx.clone(), &spec).unwrap();
        let mut b = HeightField::new(bx.clone(), &spec).unwrap();
        let mut rng = stream_rng(31, Stream::InitialCondition, 0);
        let plane = |c: &crate::lattice::Coord| 0.3 * c[0] as f64 - 0.1 * c[1] as f64;
        a.fill_free(|c| plane(c) + rng.sample::<f64, _>(StandardNormal));
        b.fill_free(|c| plane(c) + rng.sample::<f64, _>(StandardNormal));
        let model = quad_model(1.0);
        let lam1 = dirichlet_lambda1(2, 7, 1.0);
        let t_target = 3.0 * (1e3f64).ln() / (2.0 * lam1);
        let series = coupled_run(&model, a, b, t_target, 0.02, 0.5, 13, 50).unwrap();
        let d0 = series.rows.first().unwrap().weighted_distance;
        let dt = series.rows.last().unwrap().weighted_distance;
        assert!(dt / d0 < 1e-3, "ratio {}", dt / d0);
    }

    #[test]
    fn mismatched_replicas_are_rejected() {
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let a = HeightField::new(bx.clone(), &BoundarySpec::zero()).unwrap();
        let b = HeightField::new(bx, &BoundarySpec::tilt(&[1.0, 0.0])).unwrap();
        let model = quad_model(1.0);
        assert!(coupled_run(&model, a, b, 1.0, 0.02, 0.5, 0, 1).is_err());
    }
}
