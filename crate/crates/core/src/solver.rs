//! SPD lattice systems: the conductance-weighted Dirichlet Laplacian on the
//! free sites of a domain, a matrix-free conjugate-gradient solver, and a
//! dense Cholesky path for small systems.
//!
//! The operator convention is fixed crate-wide: `A(y,y) = sum_{x~y} w_xy`
//! (frozen neighbors included), `A(x,y) = -w_xy` for free neighbors, with
//! `w_xy` the undirected bond weight. Each undirected bond is counted once,
//! consistent with the half-ordered-sum Hamiltonian.

use crate::disorder::BondField;
use crate::error::{Error, Result};
use crate::lattice::{Domain, NOT_FREE};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::sync::Arc;

/// Relative tolerance used for all exact-table solves.
pub const CG_TOL: f64 = 1e-10;
/// Free-site count below which dense factorization is used.
pub const DENSE_LIMIT: usize = 5_000;

#[derive(Clone)]
pub struct LatticeSystem {
    domain: Arc<Domain>,
    dim: usize,
    /// Local neighbor index per (free site, directed slot); `NOT_FREE` when
    /// the neighbor is frozen or absorbing.
    nbr_local: Vec<u32>,
    /// Global site index per slot (valid when the neighbor is in the box).
    nbr_global: Vec<u32>,
    nbr_weight: Vec<f64>,
    diag: Vec<f64>,
}

impl LatticeSystem {
    /// Assemble for a domain with bond weights `kappa0 * conductance(bond)`.
    /// `conductances = None` means homogeneous weight `kappa0`.
    pub fn assemble(
        domain: Arc<Domain>,
        conductances: Option<&BondField>,
        kappa0: f64,
    ) -> LatticeSystem {
        let bx = domain.bbox();
        let dim = bx.dim();
        let n = domain.free_count();
        let slots = 2 * dim;
        let mut nbr_local = vec![NOT_FREE; n * slots];
        let mut nbr_global = vec![u32::MAX; n * slots];
        let mut nbr_weight = vec![0.0; n * slots];
        let mut diag = vec![0.0; n];
        for l in 0..n {
            let c = domain.coord_of_local(l as u32);
            let mut slot = 0;
            for ax in 0..dim {
                for sgn in [1i32, -1] {
                    let mut nb = c;
                    nb[ax] += sgn;
                    // canonical tail of the undirected bond
                    let tail = if sgn > 0 { c } else { nb };
                    if let Some(g) = bx.site_index(&nb) {
                        let w = kappa0
                            * conductances
                                .map(|k| {
                                    let t = bx.site_index(&tail).expect("tail in box");
                                    k.value(t, ax)
                                })
                                .unwrap_or(1.0);
                        diag[l] += w;
                        nbr_weight[l * slots + slot] = w;
                        nbr_global[l * slots + slot] = g;
                        if let Some(j) = domain.local_of_global(g) {
                            nbr_local[l * slots + slot] = j;
                        }
                    } else {
                        // absorbing complement outside the hosted sites:
                        // still a Dirichlet bond with weight kappa0 (the
                        // conductance field does not extend there)
                        let w = kappa0
                            * conductances
                                .and_then(|k| bx.site_index(&tail).map(|t| k.value(t, ax)))
                                .unwrap_or(1.0);
                        diag[l] += w;
                        nbr_weight[l * slots + slot] = w;
                    }
                    slot += 1;
                }
            }
        }
        LatticeSystem {
            domain,
            dim,
            nbr_local,
            nbr_global,
            nbr_weight,
            diag,
        }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    /// `(neighbor local indices, per-slot bond weights, slots per site)`;
    /// slot weights include bonds to frozen/absorbing neighbors.
    pub fn adjacency(&self) -> (&[u32], &[f64], usize) {
        (&self.nbr_local, &self.nbr_weight, 2 * self.dim)
    }

    /// Global site index per slot (u32::MAX when outside the box).
    pub fn neighbor_globals(&self) -> &[u32] {
        &self.nbr_global
    }

    /// Replace all per-slot bond weights; the diagonal is recomputed as the
    /// row sum (every bond, frozen neighbors included).
    pub fn replace_weights(&mut self, weights: &[f64]) {
        assert_eq!(weights.len(), self.nbr_weight.len());
        self.nbr_weight.copy_from_slice(weights);
        let slots = 2 * self.dim;
        for l in 0..self.diag.len() {
            self.diag[l] = self.nbr_weight[l * slots..(l + 1) * slots].iter().sum();
        }
    }

    /// A copy with different bond weights; used to freeze one slice of a
    /// time-dependent environment.
    pub fn clone_with_weights(&self, weights: &[f64]) -> LatticeSystem {
        let mut sys = self.clone();
        sys.replace_weights(weights);
        sys
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let slots = 2 * self.dim;
        for i in 0..self.size() {
            let mut acc = self.diag[i] * x[i];
            let base = i * slots;
            for s in 0..slots {
                let j = self.nbr_local[base + s];
                if j != NOT_FREE {
                    acc -= self.nbr_weight[base + s] * x[j as usize];
                }
            }
            out[i] = acc;
        }
    }

    /// Boundary-flux load vector: `b_i = sum over frozen neighbors w * value`.
    /// `values` is indexed by global site index.
    pub fn boundary_flux(&self, values: &[f64], frozen: &[bool]) -> Vec<f64> {
        let slots = 2 * self.dim;
        let mut b = vec![0.0; self.size()];
        for i in 0..self.size() {
            let base = i * slots;
            for s in 0..slots {
                if self.nbr_local[base + s] == NOT_FREE {
                    let g = self.nbr_global[base + s];
                    if g != u32::MAX && frozen[g as usize] {
                        b[i] += self.nbr_weight[base + s] * values[g as usize];
                    }
                }
            }
        }
        b
    }

    /// Conjugate gradients to relative tolerance `tol`.
    pub fn solve_cg(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = self.size();
        let bnorm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rs: f64 = r.iter().map(|v| v * v).sum();
        let max_iter = 40 * (n as f64).sqrt() as usize + 200;
        for it in 0..max_iter {
            if rs.sqrt() <= tol * bnorm {
                return Ok(x);
            }
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                return Err(Error::NotPositiveDefinite);
            }
            let alpha = rs / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rs_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rs_new / rs;
            rs = rs_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            if it == max_iter - 1 {
                return Err(Error::SolverFailure {
                    residual: rs.sqrt() / bnorm,
                    iterations: max_iter,
                });
            }
        }
        Ok(x)
    }

    /// Dense assembly (small systems).
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.size();
        let slots = 2 * self.dim;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for s in 0..slots {
                let j = self.nbr_local[i * slots + s];
                if j != NOT_FREE {
                    m[(i, j as usize)] -= self.nbr_weight[i * slots + s];
                }
            }
        }
        m
    }

    pub fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        if self.size() > DENSE_LIMIT {
            return Err(Error::Unsupported(format!(
                "dense factorization limited to {DENSE_LIMIT} free sites, got {}",
                self.size()
            )));
        }
        self.dense().cholesky().ok_or(Error::NotPositiveDefinite)
    }

    /// Single-RHS solve. Factorizing pays off only for repeated solves on
    /// one matrix; callers doing that hold a `cholesky()` themselves.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if self.size() <= 256 {
            let chol = self.cholesky()?;
            let b = DVector::from_column_slice(rhs);
            Ok(chol.solve(&b).as_slice().to_vec())
        } else {
            self.solve_cg(rhs, 1e-12)
        }
    }
}

/// Smallest eigenvalue of the homogeneous Dirichlet Laplacian (weight
/// `kappa`) on the cube with `m` free sites per axis:
/// `kappa * 4 d sin^2(pi / (2(m+1)))`.
pub fn dirichlet_lambda1(dim: usize, m_sites_per_axis: usize, kappa: f64) -> f64 {
    let s = (std::f64::consts::PI / (2.0 * (m_sites_per_axis as f64 + 1.0))).sin();
    kappa * 4.0 * dim as f64 * s * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_box;

    fn interior_domain(d: usize, n: i32) -> Arc<Domain> {
        Arc::new(Domain::interior(build_box(d, n, &vec![0; d]).unwrap()))
    }

    #[test]
    fn one_dimensional_closed_form() {
        // interior {-1, 0, 1} of the 1d box: A = tridiag(-1, 2, -1);
        // (A^{-1})_{aa} = a(n+1-a)/(n+1) with sites relabeled 1..3
        let sys = LatticeSystem::assemble(interior_domain(1, 1), None, 1.0);
        let mut rhs = vec![0.0; 3];
        rhs[1] = 1.0;
        let x = sys.solve(&rhs).unwrap();
        assert!((x[1] - 1.0).abs() < 1e-12); // 2*2/4
        assert!((x[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cg_matches_dense() {
        let sys = LatticeSystem::assemble(interior_domain(2, 3), None, 1.3);
        let n = sys.size();
        let rhs: Vec<f64> = (0..n).map(|i| ((i * 7919) % 23) as f64 - 11.0).collect();
        let dense = sys.solve(&rhs).unwrap();
        let cg = sys.solve_cg(&rhs, 1e-12).unwrap();
        let err = dense
            .iter()
            .zip(&cg)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-9, "err {err}");
    }

    #[test]
    fn residual_of_exact_table() {
        // ||A x - e|| small after solve
        let sys = LatticeSystem::assemble(interior_domain(2, 4), None, 1.0);
        let n = sys.size();
        let mut rhs = vec![0.0; n];
        rhs[n / 2] = 1.0;
        let x = sys.solve_cg(&rhs, 1e-12).unwrap();
        let mut ax = vec![0.0; n];
        sys.apply(&x, &mut ax);
        let res = ax
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(res < 1e-10);
    }

    #[test]
    fn lambda1_matches_dense_eigenvalue() {
        let sys = LatticeSystem::assemble(interior_domain(2, 3), None, 1.0);
        let eig = sys.dense().symmetric_eigen();
        let min = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let formula = dirichlet_lambda1(2, 7, 1.0);
        assert!((min - formula).abs() < 1e-10, "{min} vs {formula}");
    }
}
