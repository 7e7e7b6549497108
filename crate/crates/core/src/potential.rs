//! Bond potentials `V` with analytic first and second derivatives.
//!
//! All potentials are even. The quadratic and perturbed-convex kinds are
//! uniformly strictly convex with certified bounds `C1 <= V'' <= C2`; the
//! two-well Gaussian mixture is exploratory and carries no convexity
//! certificate, so the uniqueness-oriented invariants are never asserted
//! for it.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Constructor spec for [`Potential`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `V(s) = kappa s^2 / 2`.
    Quadratic { kappa: f64 },
    /// `V(s) = s^2/2 + eps sqrt(1 + s^2)`; `V'' = 1 + eps (1+s^2)^{-3/2}`.
    Perturbed { eps: f64 },
    /// `exp(-V(s)) = p exp(-k1 s^2) + (1-p) exp(-k2 s^2)`; non-convex for
    /// separated wells. Exploratory only.
    Mixture { p: f64, kappa1: f64, kappa2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Quadratic,
    PerturbedConvex,
    Mixture,
}

/// An even bond potential with evaluator triple `(V, V', V'')`.
#[derive(Debug, Clone, Copy)]
pub struct Potential {
    spec: PotentialSpec,
    kind: PotentialKind,
    /// Certified convexity window; `None` for the mixture.
    convexity: Option<(f64, f64)>,
}

pub fn make_potential(spec: PotentialSpec) -> Result<Potential> {
    Potential::new(spec)
}

impl Potential {
    pub fn new(spec: PotentialSpec) -> Result<Potential> {
        match spec {
            PotentialSpec::Quadratic { kappa } => {
                if !(kappa > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "quadratic stiffness {kappa} must be positive"
                    )));
                }
                Ok(Potential {
                    spec,
                    kind: PotentialKind::Quadratic,
                    convexity: Some((kappa, kappa)),
                })
            }
            PotentialSpec::Perturbed { eps } => {
                if !(eps >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "perturbation strength {eps} must be >= 0"
                    )));
                }
                Ok(Potential {
                    spec,
                    kind: PotentialKind::PerturbedConvex,
                    convexity: Some((1.0, 1.0 + eps)),
                })
            }
            PotentialSpec::Mixture { p, kappa1, kappa2 } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "mixture weight {p} outside [0,1]"
                    )));
                }
                if !(kappa1 > 0.0) || !(kappa2 > 0.0) {
                    return Err(Error::InvalidParameter(
                        "mixture stiffnesses must be positive".into(),
                    ));
                }
                Ok(Potential {
                    spec,
                    kind: PotentialKind::Mixture,
                    convexity: None,
                })
            }
        }
    }

    pub fn spec(&self) -> PotentialSpec {
        self.spec
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    /// `(C1, C2)` with `C1 <= V'' <= C2`, when certified.
    pub fn convexity_bounds(&self) -> Option<(f64, f64)> {
        self.convexity
    }

    pub fn is_uniformly_convex(&self) -> bool {
        self.convexity.is_some()
    }

    /// Exploratory potentials opt out of the uniqueness-oriented invariants.
    pub fn is_exploratory(&self) -> bool {
        self.kind == PotentialKind::Mixture
    }

    pub fn is_quadratic(&self) -> bool {
        self.kind == PotentialKind::Quadratic
    }

    pub fn value(&self, s: f64) -> f64 {
        match self.spec {
            PotentialSpec::Quadratic { kappa } => 0.5 * kappa * s * s,
            PotentialSpec::Perturbed { eps } => 0.5 * s * s + eps * (1.0 + s * s).sqrt(),
            PotentialSpec::Mixture { p, kappa1, kappa2 } => {
                -(p * (-kappa1 * s * s).exp() + (1.0 - p) * (-kappa2 * s * s).exp()).ln()
            }
        }
    }

    pub fn dv(&self, s: f64) -> f64 {
        match self.spec {
            PotentialSpec::Quadratic { kappa } => kappa * s,
            PotentialSpec::Perturbed { eps } => s + eps * s / (1.0 + s * s).sqrt(),
            PotentialSpec::Mixture { p, kappa1, kappa2 } => {
                let w = p * (-kappa1 * s * s).exp();
                let u = (1.0 - p) * (-kappa2 * s * s).exp();
                2.0 * s * (kappa1 * w + kappa2 * u) / (w + u)
            }
        }
    }

    pub fn d2v(&self, s: f64) -> f64 {
        match self.spec {
            PotentialSpec::Quadratic { kappa } => kappa,
            PotentialSpec::Perturbed { eps } => 1.0 + eps * (1.0 + s * s).powf(-1.5),
            PotentialSpec::Mixture { p, kappa1, kappa2 } => {
                let w = p * (-kappa1 * s * s).exp();
                let u = (1.0 - p) * (-kappa2 * s * s).exp();
                let z = w + u;
                let m1 = (kappa1 * w + kappa2 * u) / z;
                let m2 = (kappa1 * kappa1 * w + kappa2 * kappa2 * u) / z;
                2.0 * m1 - 4.0 * s * s * (m2 - m1 * m1)
            }
        }
    }
}
