//! Quenched disorder: per-site external fields (model A) and per-bond
//! conductances (model B).
//!
//! Values are drawn from a counter-based stream keyed by the absolute
//! coordinate of the site (or the canonical tail and axis of the bond), so a
//! `DisorderSample` is a finite window of one infinite random field:
//! regenerating on a shifted box yields exactly the shifted values, and the
//! result is independent of thread count.
//!
//! Model B is specialized to multiplicative conductances: the bond potential
//! is `kappa_b * V(s)` with `kappa_b` in a compact window `[kappa(1-delta),
//! kappa(1+delta)]`, the canonical instance of bond disorder with a trivially
//! verified ellipticity envelope. Laws are restricted to Gaussian and
//! bounded-support families.

use crate::error::{Error, Result};
use crate::lattice::{Coord, LatticeBox, SiteIdx};
use crate::rng::{coord_key, Stream};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Which Hamiltonian the disorder enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Site disorder: i.i.d. external fields coupling linearly to heights.
    A,
    /// Bond disorder: random conductances scaling the bond potential.
    B,
}

/// Disorder laws. Site laws are symmetric with finite variance; the
/// conductance law is bounded away from zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum DisorderLaw {
    Gaussian {
        sigma: f64,
    },
    Rademacher {
        sigma: f64,
    },
    Uniform {
        half_width: f64,
    },
    /// `kappa_b = kappa (1 + delta u)`, `u ~ Uniform[-1, 1]`, `0 <= delta < 1`.
    UniformConductance {
        kappa: f64,
        delta: f64,
    },
}

impl DisorderLaw {
    pub fn is_site_law(&self) -> bool {
        !matches!(self, DisorderLaw::UniformConductance { .. })
    }

    pub fn validate(&self, model: ModelKind) -> Result<()> {
        match (model, self) {
            (ModelKind::A, DisorderLaw::Gaussian { sigma }) if *sigma >= 0.0 => Ok(()),
            (ModelKind::A, DisorderLaw::Rademacher { sigma }) if *sigma >= 0.0 => Ok(()),
            (ModelKind::A, DisorderLaw::Uniform { half_width }) if *half_width >= 0.0 => Ok(()),
            (ModelKind::B, DisorderLaw::UniformConductance { kappa, delta })
                if *kappa > 0.0 && (0.0..1.0).contains(delta) =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidParameter(format!(
                "law {self:?} is not admissible for model {model:?}"
            ))),
        }
    }

    /// Variance of a single draw.
    pub fn variance(&self) -> f64 {
        match self {
            DisorderLaw::Gaussian { sigma } => sigma * sigma,
            DisorderLaw::Rademacher { sigma } => sigma * sigma,
            DisorderLaw::Uniform { half_width } => half_width * half_width / 3.0,
            DisorderLaw::UniformConductance { kappa, delta } => {
                (kappa * delta) * (kappa * delta) / 3.0
            }
        }
    }

    /// Support window `[lo, hi]` of a conductance draw.
    pub fn conductance_window(&self) -> Option<(f64, f64)> {
        match self {
            DisorderLaw::UniformConductance { kappa, delta } => {
                Some((kappa * (1.0 - delta), kappa * (1.0 + delta)))
            }
            _ => None,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            DisorderLaw::Gaussian { sigma } => {
                let g: f64 = rng.sample(StandardNormal);
                sigma * g
            }
            DisorderLaw::Rademacher { sigma } => {
                if rng.random::<bool>() {
                    *sigma
                } else {
                    -*sigma
                }
            }
            DisorderLaw::Uniform { half_width } => half_width * (2.0 * rng.random::<f64>() - 1.0),
            DisorderLaw::UniformConductance { kappa, delta } => {
                kappa * (1.0 + delta * (2.0 * rng.random::<f64>() - 1.0))
            }
        }
    }
}

fn site_value(law: &DisorderLaw, seed: u64, coord: &[i32]) -> f64 {
    let key = crate::rng::derive(seed, Stream::SiteDisorder, coord_key(coord, None));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    law.draw(&mut rng)
}

fn bond_value(law: &DisorderLaw, seed: u64, tail: &[i32], axis: usize) -> f64 {
    let key = crate::rng::derive(seed, Stream::BondDisorder, coord_key(tail, Some(axis)));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    law.draw(&mut rng)
}

/// Per-site real values on `Λ ∪ ∂Λ`, in site-index order.
#[derive(Debug, Clone)]
pub struct SiteField {
    values: Vec<f64>,
}

impl SiteField {
    pub fn zeros(bx: &LatticeBox) -> SiteField {
        SiteField {
            values: vec![0.0; bx.total_sites()],
        }
    }

    pub fn value(&self, idx: SiteIdx) -> f64 {
        self.values[idx as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Antithetic partner `xi -> -xi`.
    pub fn negated(&self) -> SiteField {
        SiteField {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// Per-bond conductances keyed by `(canonical tail site, axis)`, covering
/// every positively oriented bond with an endpoint in the box.
#[derive(Debug, Clone)]
pub struct BondField {
    dim: usize,
    values: Vec<f64>,
}

impl BondField {
    pub fn constant(bx: &LatticeBox, kappa: f64) -> BondField {
        BondField {
            dim: bx.dim(),
            values: vec![kappa; bx.total_sites() * bx.dim()],
        }
    }

    #[inline]
    pub fn value(&self, tail_idx: SiteIdx, axis: usize) -> f64 {
        self.values[tail_idx as usize * self.dim + axis]
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// A quenched realization: model tag, law, seed, and materialized values.
#[derive(Debug, Clone)]
pub struct DisorderSample {
    pub model: ModelKind,
    pub law: DisorderLaw,
    pub seed: u64,
    pub fields: Option<SiteField>,
    pub conductances: Option<BondField>,
}

/// Materialize the disorder window for `bx` under `(law, seed)`.
///
/// Deterministic given `(seed, law)` and keyed by absolute coordinates:
/// `sample_disorder(model, bx.shifted(v), law, seed)` reproduces the same
/// physical values on the overlap.
pub fn sample_disorder(
    model: ModelKind,
    bx: &LatticeBox,
    law: DisorderLaw,
    seed: u64,
) -> Result<DisorderSample> {
    law.validate(model)?;
    match model {
        ModelKind::A => {
            let mut values = Vec::with_capacity(bx.total_sites());
            for idx in 0..bx.total_sites() as SiteIdx {
                let c = bx.site_coord(idx);
                values.push(site_value(&law, seed, &c[..bx.dim()]));
            }
            Ok(DisorderSample {
                model,
                law,
                seed,
                fields: Some(SiteField { values }),
                conductances: None,
            })
        }
        ModelKind::B => {
            let dim = bx.dim();
            let mut values = vec![0.0; bx.total_sites() * dim];
            for idx in 0..bx.total_sites() as SiteIdx {
                let c = bx.site_coord(idx);
                for ax in 0..dim {
                    values[idx as usize * dim + ax] = bond_value(&law, seed, &c[..dim], ax);
                }
            }
            let field = BondField { dim, values };
            if let Some((lo, _hi)) = law.conductance_window() {
                let (got_lo, _) = field.min_max();
                debug_assert!(got_lo >= lo * (1.0 - 1e-12));
            }
            Ok(DisorderSample {
                model,
                law,
                seed,
                fields: None,
                conductances: Some(field),
            })
        }
    }
}

/// The shift `tau_v xi`: the field whose value at `y` is `xi(y - v)`.
///
/// Materialized on the same box by re-keying draws at `coord - v`; combined
/// with `LatticeBox::shifted` this gives exact finite-volume shift-covariance
/// checks.
pub fn shifted_site_disorder(
    bx: &LatticeBox,
    law: DisorderLaw,
    seed: u64,
    v: &[i32],
) -> Result<SiteField> {
    law.validate(ModelKind::A)?;
    let dim = bx.dim();
    let mut values = Vec::with_capacity(bx.total_sites());
    for idx in 0..bx.total_sites() as SiteIdx {
        let c = bx.site_coord(idx);
        let mut base = [0i32; crate::lattice::MAX_DIM];
        for i in 0..dim {
            base[i] = c[i] - v[i];
        }
        values.push(site_value(&law, seed, &base[..dim]));
    }
    Ok(SiteField { values })
}

/// Build a `SiteField` from explicit values (index order); test and
/// construction helper.
pub fn site_field_from_values(bx: &LatticeBox, values: Vec<f64>) -> Result<SiteField> {
    if values.len() != bx.total_sites() {
        return Err(Error::ShapeMismatch(format!(
            "expected {} site values, got {}",
            bx.total_sites(),
            values.len()
        )));
    }
    Ok(SiteField { values })
}

/// Build a `BondField` from a per-bond function; construction helper.
pub fn bond_field_from_fn(bx: &LatticeBox, mut f: impl FnMut(&Coord, usize) -> f64) -> BondField {
    let dim = bx.dim();
    let mut values = vec![0.0; bx.total_sites() * dim];
    for idx in 0..bx.total_sites() as SiteIdx {
        let c = bx.site_coord(idx);
        for ax in 0..dim {
            values[idx as usize * dim + ax] = f(&c, ax);
        }
    }
    BondField { dim, values }
}
