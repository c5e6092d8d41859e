//! Smallest eigenpairs of the normalized Laplacian by block Krylov
//! iteration with full reorthogonalization and Rayleigh-Ritz extraction.
//!
//! The block size equals the number of requested eigenpairs so repeated
//! eigenvalues (several components) are captured up to that multiplicity.

use faer::Mat;
use rand_distr::{Distribution, StandardNormal};

use super::LaplacianOperator;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::rng;

#[derive(Debug, Clone)]
pub struct KrylovOptions {
    /// Ritz pairs are accepted once `||L x - θ x|| <= tol`.
    pub tol: f64,
    /// Upper bound on the subspace dimension (capped at the node count).
    pub max_dim: usize,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tol: 1e-9,
            max_dim: 1500,
            seed: 0x5EED,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthogonalizes `v` against `basis` twice and normalizes it. Returns
/// `false` when `v` lies (numerically) in the span of `basis`.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let before = dot(v, v).sqrt();
    if before == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            axpy(v, -c, q);
        }
    }
    let after = dot(v, v).sqrt();
    if after <= 1e-10 * before {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= after);
    true
}

struct KrylovBasis<'a, 'g> {
    op: &'a LaplacianOperator<'g>,
    max_dim: usize,
    rng: rng::Rng,
    basis: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    /// Projected matrix `Q' L Q`, grown one vector at a time.
    projected: Vec<Vec<f64>>,
}

impl KrylovBasis<'_, '_> {
    fn random_vector(&mut self) -> Vec<f64> {
        (0..self.op.dim()).map(|_| StandardNormal.sample(&mut self.rng)).collect()
    }

    fn push(&mut self, v: Vec<f64>) {
        let mut lv = vec![0.0; v.len()];
        self.op.apply(&v, &mut lv);
        let mut row: Vec<f64> = self.basis.iter().map(|q| dot(q, &lv)).collect();
        for (r, &t) in self.projected.iter_mut().zip(&row) {
            r.push(t);
        }
        row.push(dot(&v, &lv));
        self.projected.push(row);
        self.basis.push(v);
        self.images.push(lv);
    }

    /// Adds the orthonormalized candidates, substituting random directions
    /// for dependent ones. Returns the indices of the added vectors.
    fn extend(&mut self, candidates: Vec<Vec<f64>>) -> Vec<usize> {
        let mut added = Vec::new();
        for mut v in candidates {
            if self.basis.len() >= self.max_dim {
                break;
            }
            let mut ok = orthonormalize(&mut v, &self.basis);
            let mut attempts = 0;
            while !ok && attempts < 5 {
                v = self.random_vector();
                ok = orthonormalize(&mut v, &self.basis);
                attempts += 1;
            }
            if ok {
                added.push(self.basis.len());
                self.push(v);
            }
        }
        added
    }
}

pub(super) fn smallest_eigenpairs(
    op: &LaplacianOperator<'_>,
    k: usize,
    opts: &KrylovOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = op.dim();
    let mut kb = KrylovBasis {
        op,
        max_dim: opts.max_dim.min(n).max(k),
        rng: rng::rng(opts.seed),
        basis: Vec::new(),
        images: Vec::new(),
        projected: Vec::new(),
    };
    let start: Vec<Vec<f64>> = (0..k).map(|_| kb.random_vector()).collect();
    let mut block = kb.extend(start);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let dim = kb.basis.len();
        if dim >= 2 * k || dim >= kb.max_dim {
            let p = &kb.projected;
            let t = Mat::from_fn(dim, dim, |i, j| 0.5 * (p[i][j] + p[j][i]));
            let (theta, y) = symmetric_eigen(&t)?;
            let mut values = Vec::with_capacity(k);
            let mut vectors = Vec::with_capacity(k);
            for c in 0..k.min(dim) {
                let mut x = vec![0.0; n];
                let mut lx = vec![0.0; n];
                for j in 0..dim {
                    axpy(&mut x, y[(j, c)], &kb.basis[j]);
                    axpy(&mut lx, y[(j, c)], &kb.images[j]);
                }
                let resid = lx
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - theta[c] * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if resid > opts.tol {
                    break;
                }
                values.push(theta[c]);
                vectors.push(x);
            }
            if values.len() == k {
                return Ok((values, vectors));
            }
            if dim >= kb.max_dim {
                return Err(Error::NonConvergence { iterations });
            }
        }
        let candidates: Vec<Vec<f64>> = block.iter().map(|&j| kb.images[j].clone()).collect();
        block = kb.extend(candidates);
        if block.is_empty() {
            // Invariant subspace reached without enough pairs: restart from noise.
            let fresh: Vec<Vec<f64>> = (0..k).map(|_| kb.random_vector()).collect();
            block = kb.extend(fresh);
            if block.is_empty() {
                return Err(Error::NonConvergence { iterations });
            }
        }
    }
}
