//! Exact Gaussian machinery for quadratic bond potentials.
//!
//! With `V(s) = kappa0 s^2/2` and bond conductances `kappa_b`, the free-site
//! marginal is Gaussian with precision `A` equal to the weighted Dirichlet
//! Laplacian (weights `kappa0 kappa_b`) and mean `m` solving `A m = b`, where
//! `b` collects the boundary flux minus the site fields. Sampling goes
//! through the dense Cholesky factor `A = L L^T` as `m + L^{-T} z`.

use crate::disorder::{BondField, SiteField};
use crate::error::{Error, Result};
use crate::field::{BoundarySpec, HeightField};
use crate::lattice::{Coord, Domain, LatticeBox};
use crate::solver::{LatticeSystem, CG_TOL, DENSE_LIMIT};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub struct GaussianModel {
    bx: Arc<LatticeBox>,
    boundary: BoundarySpec,
    system: LatticeSystem,
    mean_free: Vec<f64>,
    template: HeightField,
    chol: Option<Cholesky<f64, Dyn>>,
    column_cache: Mutex<HashMap<u32, Arc<Vec<f64>>>>,
}

impl GaussianModel {
    /// Build the exact model. `kappa0` is the quadratic stiffness,
    /// `conductances` the optional per-bond disorder, `fields` the optional
    /// per-site disorder.
    pub fn build(
        bx: Arc<LatticeBox>,
        kappa0: f64,
        conductances: Option<&BondField>,
        fields: Option<&SiteField>,
        boundary: &BoundarySpec,
    ) -> Result<GaussianModel> {
        if !(kappa0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stiffness {kappa0} must be positive"
            )));
        }
        let template = HeightField::new(bx.clone(), boundary)?;
        let pinned: Vec<Coord> = boundary
            .pinned
            .iter()
            .map(|p| crate::lattice::coord_from(p))
            .collect();
        let domain = Arc::new(Domain::interior_minus((*bx).clone(), &pinned));
        let system = LatticeSystem::assemble(domain, conductances, kappa0);
        let mut rhs = system.boundary_flux(template.values(), template.frozen());
        if let Some(xi) = fields {
            for (l, r) in rhs.iter_mut().enumerate() {
                let c = system.domain().coord_of_local(l as u32);
                let g = bx.site_index(&c).unwrap();
                *r -= xi.value(g);
            }
        }
        let mean_free = system.solve(&rhs)?;
        let chol = if system.size() <= DENSE_LIMIT {
            Some(system.cholesky()?)
        } else {
            None
        };
        Ok(GaussianModel {
            bx,
            boundary: boundary.clone(),
            system,
            mean_free,
            template,
            chol,
            column_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn boxref(&self) -> &Arc<LatticeBox> {
        &self.bx
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }

    pub fn free_count(&self) -> usize {
        self.system.size()
    }

    /// The mean field as a full height configuration.
    pub fn mean_field(&self) -> HeightField {
        let mut f = self.template.clone();
        for (l, &m) in self.mean_free.iter().enumerate() {
            let c = self.system.domain().coord_of_local(l as u32);
            let g = self.bx.site_index(&c).unwrap() as usize;
            f.values_mut()[g] = m;
        }
        f
    }

    pub fn mean_at(&self, c: &Coord) -> Result<f64> {
        match self.system.domain().local_index(c) {
            Some(l) => Ok(self.mean_free[l as usize]),
            None => self.template.value(c),
        }
    }

    /// One exact sample `m + L^{-T} z`.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<HeightField> {
        let chol = self.chol.as_ref().ok_or_else(|| {
            Error::Unsupported(format!(
                "exact sampling needs a dense factorization (<= {DENSE_LIMIT} free sites)"
            ))
        })?;
        let n = self.system.size();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        // A = L L^T  =>  cov(L^{-T} z) = A^{-1}
        let y = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or(Error::NotPositiveDefinite)?;
        let mut f = self.template.clone();
        for l in 0..n {
            let c = self.system.domain().coord_of_local(l as u32);
            let g = self.bx.site_index(&c).unwrap() as usize;
            f.values_mut()[g] = self.mean_free[l] + y[l];
        }
        Ok(f)
    }

    fn covariance_column(&self, c: &Coord) -> Result<Arc<Vec<f64>>> {
        let l = self
            .system
            .domain()
            .local_index(c)
            .ok_or_else(|| Error::OutOfDomain(c[..self.bx.dim()].to_vec()))?;
        if let Some(col) = self.column_cache.lock().unwrap().get(&l) {
            return Ok(col.clone());
        }
        let n = self.system.size();
        let mut e = vec![0.0; n];
        e[l as usize] = 1.0;
        let col = Arc::new(if let Some(chol) = &self.chol {
            chol.solve(&DVector::from_column_slice(&e))
                .as_slice()
                .to_vec()
        } else {
            self.system.solve_cg(&e, CG_TOL)?
        });
        self.column_cache.lock().unwrap().insert(l, col.clone());
        Ok(col)
    }

    /// Covariance entry `(A^{-1})_{xz}`; frozen sites have zero covariance.
    pub fn covariance(&self, x: &Coord, z: &Coord) -> Result<f64> {
        if self.system.domain().local_index(x).is_none()
            || self.system.domain().local_index(z).is_none()
        {
            return Ok(0.0);
        }
        let col = self.covariance_column(z)?;
        let lx = self.system.domain().local_index(x).unwrap();
        Ok(col[lx as usize])
    }

    pub fn variance(&self, x: &Coord) -> Result<f64> {
        self.covariance(x, x)
    }

    /// Variance of the height difference `phi(x) - phi(y)`.
    pub fn difference_variance(&self, x: &Coord, y: &Coord) -> Result<f64> {
        Ok(self.variance(x)? + self.variance(y)? - 2.0 * self.covariance(x, y)?)
    }

    /// Dense covariance matrix (small systems only).
    pub fn covariance_matrix(&self) -> Result<DMatrix<f64>> {
        let chol = self
            .chol
            .as_ref()
            .ok_or_else(|| Error::Unsupported("dense covariance needs the dense path".into()))?;
        let n = self.system.size();
        Ok(chol.solve(&DMatrix::identity(n, n)))
    }

    pub fn system(&self) -> &LatticeSystem {
        &self.system
    }
}
