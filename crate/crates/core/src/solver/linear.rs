//! Sparse direct factorizations and Jacobi-preconditioned conjugate gradients.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

fn to_col(b: &[f64]) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn from_col(x: &Mat<f64>) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[(i, 0)]).collect()
}

/// Sparse Cholesky factor of a symmetric positive definite matrix.
pub struct SpdFactor {
    llt: Llt<usize, f64>,
}

impl SpdFactor {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        let llt = matrix
            .to_faer()
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(SpdFactor { llt })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        from_col(&self.llt.solve(to_col(b)))
    }
}

/// Sparse LU solve of a general square system.
pub fn lu_solve(matrix: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu: Lu<usize, f64> = matrix
        .to_faer()
        .sp_lu()
        .map_err(|e| Error::LinearSolve(format!("LU factorization failed: {e:?}")))?;
    let x = from_col(&lu.solve(to_col(b)));
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("LU solve produced non-finite values (singular matrix?)".into()));
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
pub fn conjugate_gradient(matrix: &CsrMatrix, b: &[f64], rtol: f64, max_iter: usize) -> (Vec<f64>, CgOutcome) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (x, CgOutcome { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let inv_diag: Vec<f64> = matrix.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=max_iter {
        let ap = matrix.mul_vec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm2(&r) / bnorm;
        if rel <= rtol {
            return (x, CgOutcome { iterations: it, relative_residual: rel, converged: true });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, CgOutcome { iterations: max_iter, relative_residual: rel, converged: false })
}

/// Gauss-Seidel sweeps until the relative residual drops below `rtol`.
pub fn gauss_seidel(matrix: &CsrMatrix, b: &[f64], x0: &[f64], rtol: f64, max_sweeps: usize) -> (Vec<f64>, bool) {
    let mut x = x0.to_vec();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let diag = matrix.diagonal();
    for _ in 0..max_sweeps {
        for i in 0..x.len() {
            let off: f64 = matrix.row(i).filter(|&(j, _)| j != i).map(|(j, v)| v * x[j]).sum();
            x[i] = (b[i] - off) / diag[i];
        }
        let r: Vec<f64> = matrix.mul_vec(&x).iter().zip(b).map(|(a, c)| a - c).collect();
        if norm2(&r) / bnorm <= rtol {
            return (x, true);
        }
    }
    (x, false)
}
