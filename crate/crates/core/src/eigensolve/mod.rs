//! Smallest eigenpairs of the symmetric pencil `(K, M)` and the 1D
//! weighted eigenproblem used as an independent check on the transcendental
//! root.
//!
//! The sparse path factorizes `K + σM` once (profile LDLᵀ under reverse
//! Cuthill–McKee ordering) and runs block inverse iteration with
//! M-orthonormalization and Rayleigh–Ritz on a block of `k + 6` vectors.
//! Small problems go through a dense generalized eigensolver.

mod oned;
pub mod ordering;
pub mod skyline;

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fem2d::{BoundaryCondition, DofMap, FEFunction, SymSparse};
use crate::geometry::TriMesh;

pub use oned::fem1d_weighted_eigs;
pub use skyline::SkylineLdl;

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

const DENSE_LIMIT: usize = 150;
const BLOCK_EXTRA: usize = 6;
const SEED: u64 = 0x5eed_e16e;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("factorization of the shifted pencil failed at dof {index} (pivot {pivot:e})")]
    Factorization { index: usize, pivot: f64 },
    #[error("no convergence after {iterations} iterations (worst relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("dense eigensolver failed: {0}")]
    Dense(&'static str),
    #[error("degenerate 1D discretization: {0}")]
    Degenerate(String),
}

/// Eigenpairs of a discretized Laplacian pencil.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// M-orthonormal, in free-dof numbering.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `‖Ku − λMu‖ / ‖Ku‖` per pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub bc: Option<BoundaryCondition>,
    pub h: Option<f64>,
    pub truncation: Option<f64>,
    /// Richardson value `(4λ_{h} − λ_{2h})/3` per eigenvalue.
    pub extrapolated: Option<Vec<f64>>,
    /// `|λ_{2h} − λ_h|` per eigenvalue.
    pub discretization_error: Option<Vec<f64>>,
    /// `|λ(T) − λ(T+1)|` per eigenvalue, for domains with ports.
    pub truncation_sensitivity: Option<Vec<f64>>,
    pub mesh: Option<Arc<TriMesh>>,
    pub dofs: Option<DofMap>,
}

impl EigenResult {
    fn bare(eigenvalues: Vec<f64>, eigenvectors: Vec<Vec<f64>>, residuals: Vec<f64>, iterations: usize) -> Self {
        Self {
            eigenvalues,
            eigenvectors,
            residuals,
            iterations,
            bc: None,
            h: None,
            truncation: None,
            extrapolated: None,
            discretization_error: None,
            truncation_sensitivity: None,
            mesh: None,
            dofs: None,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvector `i` as a nodal function (zero on constrained nodes).
    pub fn eigenfunction(&self, i: usize) -> Option<FEFunction> {
        let mesh = self.mesh.as_ref()?;
        let dofs = self.dofs.as_ref()?;
        let v = self.eigenvectors.get(i)?;
        FEFunction::new(mesh.clone(), dofs.expand(v)).ok()
    }

    /// Total per-eigenvalue uncertainty from refinement and truncation.
    pub fn uncertainty(&self, i: usize) -> f64 {
        let d = self.discretization_error.as_ref().map_or(0.0, |v| v[i]);
        let t = self.truncation_sensitivity.as_ref().map_or(0.0, |v| v[i]);
        d + t
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Flips `v` so that its largest-magnitude entry is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    for &x in v.iter() {
        if x.abs() > best.abs() + 1e-12 * best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Removes the M-component along the constant vector.
struct ConstantDeflation {
    m_ones: Vec<f64>,
    ones_m_ones: f64,
}

impl ConstantDeflation {
    fn new(m: &SymSparse) -> Self {
        let m_ones = m.matvec(&vec![1.0; m.n]);
        let ones_m_ones = m_ones.iter().sum();
        Self { m_ones, ones_m_ones }
    }

    fn apply(&self, x: &mut [f64]) {
        let c = dot(&self.m_ones, x) / self.ones_m_ones;
        x.iter_mut().for_each(|v| *v -= c);
    }
}

/// Generalized eigenpairs of small dense `(kd, md)`; ascending, columns
/// md-orthonormal.
fn dense_generalized(kd: DMatrix<f64>, md: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), EigenError> {
    let l = Cholesky::new(md).ok_or(EigenError::Dense("mass matrix not positive definite"))?.l();
    let a = l.solve_lower_triangular(&kd).ok_or(EigenError::Dense("singular factor"))?;
    let c = l
        .solve_lower_triangular(&a.transpose())
        .ok_or(EigenError::Dense("singular factor"))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let v = DMatrix::from_fn(eig.eigenvectors.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    let q = l
        .transpose()
        .solve_upper_triangular(&v)
        .ok_or(EigenError::Dense("singular factor"))?;
    Ok((vals, q))
}

fn to_dense(a: &SymSparse) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.n, a.n);
    for k in 0..a.nnz() {
        let (r, c, v) = (a.rows[k], a.cols[k], a.vals[k]);
        d[(r, c)] += v;
        if r != c {
            d[(c, r)] += v;
        }
    }
    d
}

fn relative_residual(k: &SymSparse, m: &SymSparse, lambda: f64, u: &[f64], floor: f64) -> f64 {
    let ku = k.matvec(u);
    let mu = m.matvec(u);
    let r: Vec<f64> = ku.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect();
    norm(&r) / norm(&ku).max(floor * norm(&mu)).max(f64::MIN_POSITIVE)
}

/// The `nev` smallest eigenpairs of `K u = λ M u`.
///
/// With `deflate_constants` the constant vector is projected out, so for a
/// pure Neumann problem the first returned eigenvalue is the first positive
/// one.
pub fn smallest_eigenpairs(
    k: &SymSparse,
    m: &SymSparse,
    nev: usize,
    tol: f64,
    deflate_constants: bool,
) -> Result<EigenResult, EigenError> {
    let n = k.n;
    if m.n != n {
        return Err(EigenError::InvalidRequest(format!("K is {n}x{n} but M is {0}x{0}", m.n)));
    }
    let available = if deflate_constants { n.saturating_sub(1) } else { n };
    if nev == 0 || nev > available {
        return Err(EigenError::InvalidRequest(format!(
            "requested {nev} eigenpairs from a pencil with {available} available"
        )));
    }
    if !(tol > 0.0) {
        return Err(EigenError::InvalidRequest(format!("tolerance {tol} must be positive")));
    }
    let trace_ratio = k.trace() / m.trace();
    let sigma = 1e-8 * if trace_ratio > 0.0 { trace_ratio } else { 1.0 };

    if n <= DENSE_LIMIT {
        return dense_path(k, m, nev, deflate_constants, sigma);
    }

    let deflation = deflate_constants.then(|| ConstantDeflation::new(m));
    let shifted = k.add_scaled(sigma, m);
    let factor = SkylineLdl::factor(&shifted).map_err(|e| EigenError::Factorization {
        index: e.index,
        pivot: e.pivot,
    })?;

    let p = (nev + BLOCK_EXTRA).min(available);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let budget = 500 * nev;
    let mut worst = f64::INFINITY;
    for it in 1..=budget {
        let mut y: Vec<Vec<f64>> = x
            .iter()
            .map(|xi| {
                let mut yi = factor.solve(&m.matvec(xi));
                if let Some(d) = &deflation {
                    d.apply(&mut yi);
                }
                yi
            })
            .collect();
        m_orthonormalize(&mut y, m, &mut rng, deflation.as_ref());

        let ky: Vec<Vec<f64>> = y.iter().map(|v| k.matvec(v)).collect();
        let my: Vec<Vec<f64>> = y.iter().map(|v| m.matvec(v)).collect();
        let kp = DMatrix::from_fn(p, p, |r, c| 0.5 * (dot(&y[r], &ky[c]) + dot(&y[c], &ky[r])));
        let mp = DMatrix::from_fn(p, p, |r, c| 0.5 * (dot(&y[r], &my[c]) + dot(&y[c], &my[r])));
        let (vals, q) = dense_generalized(kp, mp)?;

        x = (0..p)
            .map(|c| {
                let mut v = vec![0.0; n];
                for r in 0..p {
                    axpy(q[(r, c)], &y[r], &mut v);
                }
                v
            })
            .collect();

        let residuals: Vec<f64> = (0..nev)
            .map(|i| relative_residual(k, m, vals[i], &x[i], sigma))
            .collect();
        worst = residuals.iter().copied().fold(0.0, f64::max);
        if worst <= tol {
            let mut vecs: Vec<Vec<f64>> = x.into_iter().take(nev).collect();
            vecs.iter_mut().for_each(|v| fix_sign(v));
            return Ok(EigenResult::bare(vals[..nev].to_vec(), vecs, residuals, it));
        }
    }
    Err(EigenError::NotConverged {
        iterations: budget,
        residual: worst,
    })
}

/// Modified Gram–Schmidt in the M inner product, two passes.
fn m_orthonormalize(y: &mut [Vec<f64>], m: &SymSparse, rng: &mut ChaCha8Rng, deflation: Option<&ConstantDeflation>) {
    for j in 0..y.len() {
        for _pass in 0..2 {
            let my = m.matvec(&y[j]);
            for i in 0..j {
                let c = dot(&y[i], &my);
                let (done, rest) = y.split_at_mut(j);
                axpy(-c, &done[i], &mut rest[0]);
            }
        }
        let mut nrm = dot(&y[j], &m.matvec(&y[j])).sqrt();
        if !(nrm > 1e-300) {
            // collapsed direction: restart it from noise
            y[j] = (0..y[j].len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            if let Some(d) = deflation {
                d.apply(&mut y[j]);
            }
            for i in 0..j {
                let c = dot(&y[i], &m.matvec(&y[j]));
                let (done, rest) = y.split_at_mut(j);
                axpy(-c, &done[i], &mut rest[0]);
            }
            nrm = dot(&y[j], &m.matvec(&y[j])).sqrt();
        }
        y[j].iter_mut().for_each(|v| *v /= nrm);
    }
}

fn dense_path(
    k: &SymSparse,
    m: &SymSparse,
    nev: usize,
    deflate_constants: bool,
    sigma: f64,
) -> Result<EigenResult, EigenError> {
    let n = k.n;
    let (vals, q) = dense_generalized(to_dense(k), to_dense(m))?;
    let mut order: Vec<usize> = (0..n).collect();
    if deflate_constants {
        // drop the pair most aligned with the constant vector
        let m_ones = m.matvec(&vec![1.0; n]);
        let drop = (0..n)
            .max_by(|&a, &b| {
                let oa = q.column(a).iter().zip(&m_ones).map(|(x, y)| x * y).sum::<f64>().abs();
                let ob = q.column(b).iter().zip(&m_ones).map(|(x, y)| x * y).sum::<f64>().abs();
                oa.total_cmp(&ob)
            })
            .unwrap();
        order.retain(|&i| i != drop);
    }
    let chosen: Vec<usize> = order.into_iter().take(nev).collect();
    let eigenvalues: Vec<f64> = chosen.iter().map(|&i| vals[i]).collect();
    let eigenvectors: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = q.column(i).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    let residuals = eigenvalues
        .iter()
        .zip(&eigenvectors)
        .map(|(&l, v)| relative_residual(k, m, l, v, sigma))
        .collect();
    Ok(EigenResult::bare(eigenvalues, eigenvectors, residuals, 1))
}
