//! SVM-based channel estimators.
//!
//! * Uncorrelated channels: one independent no-bias soft-margin solve per
//!   antenna row, then per-row scaling to `||h_row||^2 = K`.
//! * Spatially correlated channels: a single joint Mahalanobis-margin solve
//!   over the whole matrix, then global scaling to `||H||_F = sqrt(KN)`.
//! * Joint CE-DD: the per-antenna problem augmented with detected data
//!   vectors as extra constraints, warm-started from the pilot-only duals.

use ndarray::{Array1, Array2};
use num_complex::Complex;
use rayon::prelude::*;

use crate::lifting::{unstack_side_by_side, CeRealForms};
use crate::real::Real;
use crate::svm::{
    solve_mahalanobis_margin, solve_soft_margin_warm, CeConstraint, MahalanobisSpec, SolveOptions,
    SvmError, SvmProblem,
};

/// Which exact normalization the estimate carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormConvention {
    /// Every real row satisfies `||h_row||^2 = K` (per-antenna estimators).
    PerRowSqrtK,
    /// The whole matrix satisfies `||H||_F = sqrt(KN)` (joint estimator).
    GlobalSqrtKn,
}

#[derive(Debug, Clone)]
pub struct ChannelEstimate<S> {
    /// Estimated complex channel, N x K.
    pub h_hat: Array2<Complex<S>>,
    /// Per-antenna convergence flags (single entry for the joint solve).
    pub per_row_converged: Vec<bool>,
    /// Rows whose SVM solution degenerated to the zero vector; they are left
    /// at zero and skipped by normalization.
    pub flagged_rows: usize,
    pub norm_convention: NormConvention,
    /// Dual variables of each per-antenna solve, kept for warm-starting the
    /// joint CE-DD refinement. Not populated by the joint correlated solve.
    pub row_duals: Option<Vec<Array1<S>>>,
}

fn normalize_row<S: Real>(row: &mut Array1<S>, k_users: usize) -> bool {
    let norm = row.dot(row).sqrt();
    if norm == S::zero() {
        return false;
    }
    let target = S::of(k_users as f64).sqrt();
    row.mapv_inplace(|v| v * target / norm);
    true
}

fn rows_to_estimate<S: Real>(
    rows: Vec<(Array1<S>, bool, Array1<S>)>,
    k_users: usize,
    keep_duals: bool,
) -> ChannelEstimate<S> {
    let n = rows.len();
    let mut h_t = Array2::zeros((n, 2 * k_users));
    let mut per_row_converged = Vec::with_capacity(n);
    let mut duals = Vec::with_capacity(n);
    let mut flagged_rows = 0;
    for (i, (mut row, converged, alpha)) in rows.into_iter().enumerate() {
        if !normalize_row(&mut row, k_users) {
            flagged_rows += 1;
        }
        h_t.row_mut(i).assign(&row);
        per_row_converged.push(converged);
        duals.push(alpha);
    }
    ChannelEstimate {
        h_hat: unstack_side_by_side(&h_t).expect("row layout is always even"),
        per_row_converged,
        flagged_rows,
        norm_convention: NormConvention::PerRowSqrtK,
        row_duals: keep_duals.then_some(duals),
    }
}

/// Per-antenna SVM channel estimation for uncorrelated channels.
pub fn svm_ce_uncorrelated<S: Real>(
    ce: &CeRealForms<S>,
    penalty: S,
    opts: &SolveOptions<S>,
) -> Result<ChannelEstimate<S>, SvmError> {
    let features = ce.x_t.t().to_owned(); // 2T_t x 2K, rows are points
    let k_users = features.ncols() / 2;
    let label_rows: Vec<Array1<S>> = ce.y_t.rows().into_iter().map(|r| r.to_owned()).collect();
    let rows: Vec<_> = label_rows
        .into_par_iter()
        .map(|labels| {
            let problem = SvmProblem::new(features.clone(), labels, penalty)?;
            let sol = solve_soft_margin_warm(&problem, opts, None);
            Ok((sol.weights, sol.converged, sol.duals))
        })
        .collect::<Result<_, SvmError>>()?;
    Ok(rows_to_estimate(rows, k_users, true))
}

/// Joint Mahalanobis-margin estimation for spatially correlated channels.
/// `covariances` are the complex per-user spatial covariances `C_k` (N x N);
/// their real liftings `[Re, -Im; Im, Re]` drive the margin metric.
pub fn svm_ce_correlated<S: Real>(
    ce: &CeRealForms<S>,
    covariances: &[Array2<Complex<S>>],
    penalty: S,
    opts: &SolveOptions<S>,
) -> Result<ChannelEstimate<S>, SvmError> {
    let n = ce.y_t.nrows();
    let k_users = covariances.len();
    let real_covs: Vec<Array2<S>> = covariances
        .iter()
        .map(crate::lifting::stack_complex_mult)
        .collect();
    let spec = MahalanobisSpec::new(&real_covs)?;
    if spec.num_antennas() != n {
        return Err(SvmError::InvalidProblem(format!(
            "covariance side {} does not match N = {n}",
            2 * spec.num_antennas()
        )));
    }

    let mut constraints = Vec::with_capacity(n * ce.x_t.ncols());
    for i in 0..n {
        for nn in 0..ce.x_t.ncols() {
            constraints.push(CeConstraint {
                point: ce.x_t.column(nn).to_owned(),
                label: ce.y_t[[i, nn]],
                antenna: i,
            });
        }
    }
    let (mut h_rows, sol) = solve_mahalanobis_margin(&constraints, &spec, penalty, opts)?;

    // Global normalization ||H||_F = sqrt(KN).
    let frob = h_rows.iter().map(|v| *v * *v).sum::<S>().sqrt();
    let mut flagged_rows = 0;
    if frob == S::zero() {
        flagged_rows = n;
    } else {
        let target = S::of((k_users * n) as f64).sqrt();
        h_rows.mapv_inplace(|v| v * target / frob);
    }
    Ok(ChannelEstimate {
        h_hat: unstack_side_by_side(&h_rows).expect("row layout is always even"),
        per_row_converged: vec![sol.converged],
        flagged_rows,
        norm_convention: NormConvention::GlobalSqrtKn,
        row_duals: None,
    })
}

/// Joint CE-DD refinement: re-estimate each antenna row from the pilot
/// constraints plus the detected-data constraints, warm-started from the
/// pilot-only duals when available.
///
/// `y_d2` is `[Re Y_d, Im Y_d]` (N x 2T_d) and `x_d2` the block-rotation
/// lifting of the detected data (2K x 2T_d).
pub fn joint_ce_dd_refine<S: Real>(
    ce: &CeRealForms<S>,
    y_d2: &Array2<S>,
    x_d2: &Array2<S>,
    pilot_estimate: Option<&ChannelEstimate<S>>,
    penalty: S,
    opts: &SolveOptions<S>,
) -> Result<ChannelEstimate<S>, SvmError> {
    let n = ce.y_t.nrows();
    let two_tt = ce.x_t.ncols();
    let two_td = x_d2.ncols();
    if y_d2.nrows() != n || y_d2.ncols() != two_td {
        return Err(SvmError::InvalidProblem(format!(
            "detected-data labels have shape {:?}, expected ({n}, {two_td})",
            y_d2.dim()
        )));
    }
    let k2 = ce.x_t.nrows();
    let mut features = Array2::zeros((two_tt + two_td, k2));
    for q in 0..two_tt {
        features.row_mut(q).assign(&ce.x_t.column(q));
    }
    for q in 0..two_td {
        features.row_mut(two_tt + q).assign(&x_d2.column(q));
    }

    let rows: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut labels = Array1::zeros(two_tt + two_td);
            for q in 0..two_tt {
                labels[q] = ce.y_t[[i, q]];
            }
            for q in 0..two_td {
                labels[two_tt + q] = y_d2[[i, q]];
            }
            let warm = pilot_estimate
                .and_then(|e| e.row_duals.as_ref())
                .map(|duals| {
                    let mut a = Array1::zeros(two_tt + two_td);
                    for q in 0..two_tt.min(duals[i].len()) {
                        a[q] = duals[i][q];
                    }
                    a
                });
            let problem = SvmProblem::new(features.clone(), labels, penalty)?;
            let sol = solve_soft_margin_warm(&problem, opts, warm.as_ref());
            Ok((sol.weights, sol.converged, sol.duals))
        })
        .collect::<Result<_, SvmError>>()?;
    Ok(rows_to_estimate(rows, k2 / 2, true))
}

/// `||H_hat - H||_F^2 / (KN)`.
pub fn nmse<S: Real>(h_hat: &Array2<Complex<S>>, h_true: &Array2<Complex<S>>) -> S {
    let (n, k) = h_true.dim();
    let mut acc = S::zero();
    for (a, b) in h_hat.iter().zip(h_true.iter()) {
        acc += (*a - *b).norm_sqr();
    }
    acc / S::of((n * k) as f64)
}
