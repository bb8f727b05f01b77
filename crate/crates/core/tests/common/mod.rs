//! Exact reference solver for tiny no-bias soft-margin SVM instances.
//!
//! The dual is `max 1^T a - 1/2 a^T Q a` over the box `[0, C]^P` with
//! `Q = diag(y) X X^T diag(y)`. The optimizer pins each coordinate to a
//! bound or leaves it free with zero partial derivative, so enumerating all
//! 3^P bound patterns, solving the free subsystem exactly, and keeping the
//! best box-feasible candidate yields the global optimum (P <= 6 here, so
//! at most 729 linear solves of size <= 6).

use ndarray::{Array1, Array2};

pub struct OracleSolution {
    pub weights: Vec<f64>,
    /// Primal objective at the induced weight vector.
    pub objective: f64,
}

/// Gaussian elimination with partial pivoting; `None` when the system is
/// numerically singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

pub fn solve_exact(features: &Array2<f64>, labels: &Array1<f64>, c: f64) -> OracleSolution {
    let p = features.nrows();
    let d = features.ncols();
    assert!(p <= 6, "oracle is exponential in the point count");

    let mut q = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            q[i][j] = labels[i] * labels[j] * features.row(i).dot(&features.row(j));
        }
    }

    let mut best_dual = f64::NEG_INFINITY;
    let mut best_alpha: Option<Vec<f64>> = None;
    let eps = 1e-9;

    // pattern digit per point: 0 -> alpha = 0, 1 -> alpha = C, 2 -> free
    for pattern in 0..3usize.pow(p as u32) {
        let mut digits = Vec::with_capacity(p);
        let mut rest = pattern;
        for _ in 0..p {
            digits.push(rest % 3);
            rest /= 3;
        }
        let free: Vec<usize> = (0..p).filter(|&i| digits[i] == 2).collect();
        let mut alpha: Vec<f64> = digits
            .iter()
            .map(|&dg| if dg == 1 { c } else { 0.0 })
            .collect();

        if !free.is_empty() {
            let sys: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| free.iter().map(|&j| q[i][j]).collect())
                .collect();
            let rhs: Vec<f64> = free
                .iter()
                .map(|&i| {
                    let bound: f64 = (0..p)
                        .filter(|&j| digits[j] == 1)
                        .map(|j| q[i][j] * c)
                        .sum();
                    1.0 - bound
                })
                .collect();
            let Some(sol) = solve_dense(sys, rhs) else {
                continue;
            };
            let mut ok = true;
            for (&i, &v) in free.iter().zip(sol.iter()) {
                if !(-eps..=c + eps).contains(&v) {
                    ok = false;
                    break;
                }
                alpha[i] = v.clamp(0.0, c);
            }
            if !ok {
                continue;
            }
        }

        let mut dual = alpha.iter().sum::<f64>();
        for i in 0..p {
            for j in 0..p {
                dual -= 0.5 * alpha[i] * q[i][j] * alpha[j];
            }
        }
        if dual > best_dual {
            best_dual = dual;
            best_alpha = Some(alpha);
        }
    }

    let duals = best_alpha.expect("the all-zero face is always feasible");
    let mut weights = vec![0.0; d];
    for i in 0..p {
        let coef = duals[i] * labels[i];
        for (wk, xk) in weights.iter_mut().zip(features.row(i).iter()) {
            *wk += coef * xk;
        }
    }
    let mut objective = 0.5 * weights.iter().map(|w| w * w).sum::<f64>();
    for i in 0..p {
        let margin: f64 = weights
            .iter()
            .zip(features.row(i).iter())
            .map(|(w, x)| w * x)
            .sum();
        objective += c * (1.0 - labels[i] * margin).max(0.0);
    }
    OracleSolution { weights, objective }
}
