//! Height configurations and boundary conditions.

use crate::error::{Error, Result};
use crate::lattice::{Coord, LatticeBox, SiteIdx};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Boundary condition kinds. Pinned interior sites are frozen by the same
/// mechanism as the boundary and take the kind's value at their coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryKind {
    /// `psi = 0`.
    Zero,
    /// Tilted plane `psi_u(x) = u . x`.
    Tilt { u: Vec<f64> },
    /// Explicit table; sites not listed default to zero.
    Custom { table: Vec<(Vec<i32>, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub kind: BoundaryKind,
    /// Interior sites frozen at the kind's value.
    #[serde(default)]
    pub pinned: Vec<Vec<i32>>,
}

impl BoundarySpec {
    pub fn zero() -> BoundarySpec {
        BoundarySpec {
            kind: BoundaryKind::Zero,
            pinned: Vec::new(),
        }
    }

    pub fn tilt(u: &[f64]) -> BoundarySpec {
        BoundarySpec {
            kind: BoundaryKind::Tilt { u: u.to_vec() },
            pinned: Vec::new(),
        }
    }

    pub fn zero_pinned(pinned: Vec<Vec<i32>>) -> BoundarySpec {
        BoundarySpec {
            kind: BoundaryKind::Zero,
            pinned,
        }
    }

    /// The prescribed value at a site.
    pub fn value_at(&self, c: &Coord, dim: usize) -> f64 {
        match &self.kind {
            BoundaryKind::Zero => 0.0,
            BoundaryKind::Tilt { u } => (0..dim.min(u.len())).map(|i| u[i] * c[i] as f64).sum(),
            BoundaryKind::Custom { table } => table
                .iter()
                .find(|(sc, _)| sc.len() <= crate::lattice::MAX_DIM && sc[..] == c[..sc.len()])
                .map(|(_, v)| *v)
                .unwrap_or(0.0),
        }
    }

    pub fn tilt_vector(&self, dim: usize) -> Vec<f64> {
        match &self.kind {
            BoundaryKind::Tilt { u } => {
                let mut v = u.clone();
                v.resize(dim, 0.0);
                v
            }
            _ => vec![0.0; dim],
        }
    }
}

/// Real heights on `Λ ∪ ∂Λ` with a frozen-site mask (boundary plus pinned).
#[derive(Debug, Clone)]
pub struct HeightField {
    bx: Arc<LatticeBox>,
    values: Vec<f64>,
    frozen: Vec<bool>,
}

impl HeightField {
    /// Zero heights on free sites; boundary and pinned sites take the
    /// prescribed values.
    pub fn new(bx: Arc<LatticeBox>, boundary: &BoundarySpec) -> Result<HeightField> {
        let dim = bx.dim();
        let total = bx.total_sites();
        let mut values = vec![0.0; total];
        let mut frozen = vec![false; total];
        for c in bx.boundary_iter() {
            let idx = bx.site_index(&c).unwrap() as usize;
            values[idx] = boundary.value_at(&c, dim);
            frozen[idx] = true;
        }
        for p in &boundary.pinned {
            let c = crate::lattice::coord_from(p);
            let idx = bx
                .site_index(&c)
                .filter(|_| bx.is_interior(&c))
                .ok_or_else(|| Error::OutOfDomain(p.clone()))? as usize;
            values[idx] = boundary.value_at(&c, dim);
            frozen[idx] = true;
        }
        Ok(HeightField { bx, values, frozen })
    }

    pub fn boxref(&self) -> &Arc<LatticeBox> {
        &self.bx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn is_frozen(&self, idx: SiteIdx) -> bool {
        self.frozen[idx as usize]
    }

    pub fn value(&self, c: &Coord) -> Result<f64> {
        let idx = self
            .bx
            .site_index(c)
            .ok_or_else(|| Error::OutOfDomain(c[..self.bx.dim()].to_vec()))?;
        Ok(self.values[idx as usize])
    }

    /// Set a free site's value; frozen sites are rejected.
    pub fn set(&mut self, c: &Coord, v: f64) -> Result<()> {
        let idx = self
            .bx
            .site_index(c)
            .ok_or_else(|| Error::OutOfDomain(c[..self.bx.dim()].to_vec()))?
            as usize;
        if self.frozen[idx] {
            return Err(Error::InvalidParameter(format!(
                "site {:?} is frozen",
                &c[..self.bx.dim()]
            )));
        }
        self.values[idx] = v;
        Ok(())
    }

    /// Overwrite all free interior values from a closure of the coordinate.
    pub fn fill_free(&mut self, mut f: impl FnMut(&Coord) -> f64) {
        for idx in 0..self.bx.interior_count() as SiteIdx {
            if !self.frozen[idx as usize] {
                let c = self.bx.site_coord(idx);
                self.values[idx as usize] = f(&c);
            }
        }
    }

    /// Standard-normal free values around an optional deterministic profile.
    pub fn fill_free_normal(
        &mut self,
        rng: &mut impl rand::Rng,
        mut profile: impl FnMut(&Coord) -> f64,
    ) {
        self.fill_free(|c| profile(c) + rng.sample::<f64, _>(rand_distr::StandardNormal));
    }

    /// The shift `tau_v phi`: a field on `Λ + v` with `(tau_v phi)(y) =
    /// phi(y - v)`.
    pub fn shifted(&self, v: &[i32]) -> HeightField {
        let bx = Arc::new(self.bx.shifted(v));
        let dim = bx.dim();
        let mut values = vec![0.0; bx.total_sites()];
        let mut frozen = vec![false; bx.total_sites()];
        for idx in 0..bx.total_sites() as SiteIdx {
            let c = bx.site_coord(idx);
            let mut base = c;
            for i in 0..dim {
                base[i] -= v[i];
            }
            let old = self.bx.site_index(&base).expect("shifted box is congruent");
            values[idx as usize] = self.values[old as usize];
            frozen[idx as usize] = self.frozen[old as usize];
        }
        HeightField { bx, values, frozen }
    }

    /// All values finite?
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_box, coord_from};

    #[test]
    fn tilt_boundary_values() {
        let bx = Arc::new(build_box(2, 1, &[0, 0]).unwrap());
        let f = HeightField::new(bx.clone(), &BoundarySpec::tilt(&[1.0, -2.0])).unwrap();
        let c = coord_from(&[2, 0]);
        assert_eq!(f.value(&c).unwrap(), 2.0);
        let c = coord_from(&[0, 2]);
        assert_eq!(f.value(&c).unwrap(), -4.0);
    }

    #[test]
    fn pinned_sites_freeze_with_kind_value() {
        let bx = Arc::new(build_box(2, 2, &[0, 0]).unwrap());
        let spec = BoundarySpec {
            kind: BoundaryKind::Tilt { u: vec![0.5, 0.0] },
            pinned: vec![vec![1, 1]],
        };
        let mut f = HeightField::new(bx, &spec).unwrap();
        let p = coord_from(&[1, 1]);
        assert_eq!(f.value(&p).unwrap(), 0.5);
        assert!(f.set(&p, 3.0).is_err());
        assert!(f.set(&coord_from(&[0, 0]), 3.0).is_ok());
    }

    #[test]
    fn pinning_outside_interior_is_rejected() {
        let bx = Arc::new(build_box(2, 1, &[0, 0]).unwrap());
        let spec = BoundarySpec::zero_pinned(vec![vec![2, 0]]);
        assert!(HeightField::new(bx, &spec).is_err());
    }

    #[test]
    fn shift_moves_values() {
        let bx = Arc::new(build_box(2, 1, &[0, 0]).unwrap());
        let mut f = HeightField::new(bx, &BoundarySpec::zero()).unwrap();
        f.set(&coord_from(&[1, 0]), 7.0).unwrap();
        let g = f.shifted(&[5, 5]);
        assert_eq!(g.value(&coord_from(&[6, 5])).unwrap(), 7.0);
        // tau_v . tau_{-v} = identity
        let h = g.shifted(&[-5, -5]);
        assert_eq!(h.values(), f.values());
        // out-of-domain access after shifting errors
        assert!(g.value(&coord_from(&[0, 0])).is_err());
    }
}
