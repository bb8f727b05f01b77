//! Small dense linear-algebra helpers: cyclic Jacobi eigendecomposition for
//! real symmetric matrices and the symmetric matrix square root built on it.
//! Problem sizes here are at most a few hundred, so the O(n^3)-per-sweep
//! Jacobi iteration is plenty.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {max_asym})")]
    NotSymmetric { max_asym: f64 },
    #[error("matrix is not positive definite (min eigenvalue {min_eig})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("Jacobi eigensolver did not converge in {0} sweeps")]
    NoConvergence(usize),
}

/// Eigendecomposition `A = V diag(w) V^T` of a real symmetric matrix.
pub struct SymEig<S> {
    pub values: Array1<S>,
    pub vectors: Array2<S>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi iteration for real symmetric `a`. Eigenvalues are unsorted.
pub fn sym_eig<S: Real>(a: &Array2<S>) -> Result<SymEig<S>, LinalgError> {
    let n = check_symmetric(a)?;
    let mut m = a.clone();
    let mut v = Array2::eye(n);
    if n <= 1 {
        return Ok(SymEig {
            values: m.diag().to_owned(),
            vectors: v,
        });
    }

    let eps = S::epsilon() * S::of(n as f64);
    for _ in 0..MAX_SWEEPS {
        let mut off = S::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        let scale = frob_norm_sq(&m).max(S::min_positive_value());
        if off <= eps * eps * scale {
            return Ok(SymEig {
                values: m.diag().to_owned(),
                vectors: v,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == S::zero() {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (S::of(2.0) * apq);
                // smaller-angle root of t^2 + 2 t theta - 1 = 0
                let t = if theta >= S::zero() {
                    S::one() / (theta + (S::one() + theta * theta).sqrt())
                } else {
                    -S::one() / (-theta + (S::one() + theta * theta).sqrt())
                };
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let mip = m[[i, p]];
                    let miq = m[[i, q]];
                    m[[i, p]] = c * mip - s * miq;
                    m[[i, q]] = s * mip + c * miq;
                }
                for i in 0..n {
                    let mpi = m[[p, i]];
                    let mqi = m[[q, i]];
                    m[[p, i]] = c * mpi - s * mqi;
                    m[[q, i]] = s * mpi + c * mqi;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }
    Err(LinalgError::NoConvergence(MAX_SWEEPS))
}

/// Symmetric square root of a symmetric positive (semi-)definite matrix.
///
/// Eigenvalues below `floor_ratio * lambda_max` are floored to that threshold,
/// which guards near-singular covariances; genuinely indefinite input (an
/// eigenvalue below `-floor_ratio * lambda_max`) is rejected.
pub fn sym_sqrt<S: Real>(a: &Array2<S>, floor_ratio: S) -> Result<Array2<S>, LinalgError> {
    let eig = sym_eig(a)?;
    let lambda_max = eig
        .values
        .iter()
        .cloned()
        .fold(S::zero(), |acc, w| acc.max(w));
    let floor = (lambda_max * floor_ratio).max(S::min_positive_value());
    let min_eig = eig
        .values
        .iter()
        .cloned()
        .fold(S::infinity(), |acc, w| acc.min(w));
    if min_eig < -lambda_max * floor_ratio {
        return Err(LinalgError::NotPositiveDefinite {
            min_eig: min_eig.as_f64(),
        });
    }
    let n = eig.values.len();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = S::zero();
            for k in 0..n {
                acc += eig.vectors[[i, k]] * eig.values[k].max(floor).sqrt() * eig.vectors[[j, k]];
            }
            out[[i, j]] = acc;
        }
    }
    Ok(out)
}

fn check_symmetric<S: Real>(a: &Array2<S>) -> Result<usize, LinalgError> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let scale = frob_norm_sq(a).sqrt().max(S::one());
    let mut max_asym = S::zero();
    for i in 0..rows {
        for j in (i + 1)..rows {
            max_asym = max_asym.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    if max_asym > S::of(1e-8) * scale {
        return Err(LinalgError::NotSymmetric {
            max_asym: max_asym.as_f64(),
        });
    }
    Ok(rows)
}

fn frob_norm_sq<S: Real>(a: &Array2<S>) -> S {
    a.iter().map(|x| *x * *x).sum()
}
