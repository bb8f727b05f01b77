//! Soft-margin linear SVM solvers without a bias term.
//!
//! The primal problem is
//! `min 1/2 ||w||^2 + C sum_q max(0, 1 - y_q w^T x_q)`.
//! With no bias there is no equality constraint in the dual, so every dual
//! coordinate can be optimized exactly in closed form. The solver runs dual
//! coordinate descent over the box `[0, C]^P`, cyclic with a seeded random
//! permutation per epoch, and certifies termination by the duality gap.
//!
//! The Mahalanobis-margin variant replaces `||w||^2` by per-user quadratic
//! forms `h_k^T C_k^{-1} h_k` and is reduced to the standard problem by
//! whitening with the symmetric square roots `C_k^{1/2}`.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{sym_sqrt, LinalgError};
use crate::real::Real;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("covariance block {index} rejected: {source}")]
    BadCovariance {
        index: usize,
        source: LinalgError,
    },
    #[error("constraint {index} references antenna {antenna}, but N = {n}")]
    AntennaOutOfRange {
        index: usize,
        antenna: usize,
        n: usize,
    },
}

/// A no-bias soft-margin SVM instance. Rows of `features` are the training
/// points `x_q`; labels are +1/-1.
#[derive(Debug, Clone)]
pub struct SvmProblem<S> {
    features: Array2<S>,
    labels: Array1<S>,
    penalty: S,
}

impl<S: Real> SvmProblem<S> {
    pub fn new(features: Array2<S>, labels: Array1<S>, penalty: S) -> Result<Self, SvmError> {
        if features.nrows() != labels.len() {
            return Err(SvmError::InvalidProblem(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if !(penalty > S::zero()) {
            return Err(SvmError::InvalidProblem("penalty C must be > 0".into()));
        }
        if labels.iter().any(|&y| y != S::one() && y != -S::one()) {
            return Err(SvmError::InvalidProblem("labels must be +1 or -1".into()));
        }
        Ok(Self {
            features,
            labels,
            penalty,
        })
    }

    pub fn num_points(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn penalty(&self) -> S {
        self.penalty
    }

    pub fn features(&self) -> &Array2<S> {
        &self.features
    }

    pub fn labels(&self) -> &Array1<S> {
        &self.labels
    }

    /// Primal objective at `w`.
    pub fn primal_objective(&self, w: &Array1<S>) -> S {
        let mut hinge = S::zero();
        for (q, row) in self.features.rows().into_iter().enumerate() {
            let margin = S::one() - self.labels[q] * row.dot(w);
            if margin > S::zero() {
                hinge += margin;
            }
        }
        S::of(0.5) * w.dot(w) + self.penalty * hinge
    }

    /// Dual objective at `alpha`, with `w` the induced weight vector.
    fn dual_objective(&self, alpha: &Array1<S>, w: &Array1<S>) -> S {
        alpha.sum() - S::of(0.5) * w.dot(w)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions<S> {
    /// Duality-gap threshold certifying optimality, relative to
    /// `max(1, |primal objective|)`.
    pub tol: S,
    /// Maximum number of coordinate-descent epochs.
    pub max_epochs: usize,
    /// Seed for the per-epoch shuffle of the coordinate order.
    pub shuffle_seed: u64,
}

impl<S: Real> Default for SolveOptions<S> {
    fn default() -> Self {
        Self {
            tol: S::of(1e-6),
            max_epochs: 10_000,
            shuffle_seed: 0x5eed_0b17,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvmSolution<S> {
    pub weights: Array1<S>,
    pub duals: Array1<S>,
    /// Primal objective at the returned weights.
    pub objective: S,
    /// Duality gap at termination.
    pub gap: S,
    /// Epochs consumed.
    pub iterations: usize,
    /// False when `max_epochs` ran out before the gap closed; the best-so-far
    /// iterate is still returned.
    pub converged: bool,
}

pub fn solve_soft_margin<S: Real>(problem: &SvmProblem<S>, opts: &SolveOptions<S>) -> SvmSolution<S> {
    solve_soft_margin_warm(problem, opts, None)
}

/// Same as [`solve_soft_margin`] but starting from the supplied dual vector
/// (entries are clipped into `[0, C]`).
pub fn solve_soft_margin_warm<S: Real>(
    problem: &SvmProblem<S>,
    opts: &SolveOptions<S>,
    warm_duals: Option<&Array1<S>>,
) -> SvmSolution<S> {
    let p = problem.num_points();
    let d = problem.num_features();
    let c = problem.penalty;
    let x = &problem.features;
    let y = &problem.labels;

    let sq_norms: Vec<S> = x.rows().into_iter().map(|r| r.dot(&r)).collect();

    let mut alpha: Array1<S> = match warm_duals {
        Some(a0) if a0.len() == p => a0.mapv(|a| a.max(S::zero()).min(c)),
        _ => Array1::zeros(p),
    };
    // A zero-norm point cannot affect w; its hinge loss is fixed at 1 and the
    // matching dual sits at C so the gap still closes.
    for q in 0..p {
        if sq_norms[q] == S::zero() {
            alpha[q] = c;
        }
    }

    let mut w: Array1<S> = Array1::zeros(d);
    for q in 0..p {
        if alpha[q] != S::zero() && sq_norms[q] != S::zero() {
            let coef = alpha[q] * y[q];
            w.scaled_add(coef, &x.row(q));
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.shuffle_seed);
    let mut epochs = 0;
    let mut primal = problem.primal_objective(&w);
    let mut gap = primal - problem.dual_objective(&alpha, &w);
    let mut converged = gap <= opts.tol * S::one().max(primal.abs());

    while !converged && epochs < opts.max_epochs {
        order.shuffle(&mut rng);
        for &q in &order {
            let qii = sq_norms[q];
            if qii == S::zero() {
                continue;
            }
            let grad = y[q] * x.row(q).dot(&w) - S::one();
            let unclipped = alpha[q] - grad / qii;
            let projected = unclipped.max(S::zero()).min(c);
            let delta = projected - alpha[q];
            if delta != S::zero() {
                alpha[q] = projected;
                w.scaled_add(delta * y[q], &x.row(q));
            }
        }
        epochs += 1;
        primal = problem.primal_objective(&w);
        gap = primal - problem.dual_objective(&alpha, &w);
        if gap <= opts.tol * S::one().max(primal.abs()) {
            converged = true;
        }
    }

    let objective = primal;
    SvmSolution {
        weights: w,
        duals: alpha,
        objective,
        gap,
        iterations: epochs,
        converged,
    }
}

/// One hinge constraint of the joint correlated-channel problem:
/// `y * h_{t,antenna}^T point >= 1 - xi` with `point` of length 2K.
#[derive(Debug, Clone)]
pub struct CeConstraint<S> {
    pub point: Array1<S>,
    pub label: S,
    pub antenna: usize,
}

/// Per-user real covariance blocks of the Mahalanobis margin, with cached
/// symmetric square roots.
#[derive(Debug, Clone)]
pub struct MahalanobisSpec<S> {
    sqrt_factors: Vec<Array2<S>>,
    num_antennas: usize,
}

/// Eigenvalue floor, relative to the largest eigenvalue, applied when taking
/// covariance square roots.
const EIG_FLOOR_RATIO: f64 = 1e-10;

impl<S: Real> MahalanobisSpec<S> {
    /// Build from the K real covariances `C_k` (each 2N x 2N, symmetric
    /// positive definite).
    pub fn new(block_covariances: &[Array2<S>]) -> Result<Self, SvmError> {
        if block_covariances.is_empty() {
            return Err(SvmError::InvalidProblem("no covariance blocks".into()));
        }
        let two_n = block_covariances[0].nrows();
        if two_n == 0 || two_n % 2 != 0 {
            return Err(SvmError::InvalidProblem(format!(
                "covariance side {two_n} is not a positive even number"
            )));
        }
        let mut sqrt_factors = Vec::with_capacity(block_covariances.len());
        for (index, cov) in block_covariances.iter().enumerate() {
            if cov.dim() != (two_n, two_n) {
                return Err(SvmError::InvalidProblem(format!(
                    "covariance block {index} has shape {:?}, expected ({two_n}, {two_n})",
                    cov.dim()
                )));
            }
            let root = sym_sqrt(cov, S::of(EIG_FLOOR_RATIO))
                .map_err(|source| SvmError::BadCovariance { index, source })?;
            sqrt_factors.push(root);
        }
        Ok(Self {
            sqrt_factors,
            num_antennas: two_n / 2,
        })
    }

    pub fn num_users(&self) -> usize {
        self.sqrt_factors.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn sqrt_factor(&self, k: usize) -> &Array2<S> {
        &self.sqrt_factors[k]
    }
}

/// Solve the joint Mahalanobis-margin problem
/// `min 1/2 sum_k h_k^T C_k^{-1} h_k + C sum xi` subject to the supplied
/// hinge constraints, by whitening `u_k = C_k^{-1/2} h_k`, running the
/// standard solver in the joint whitened coordinates, and unwhitening.
///
/// Returns the joint channel in the estimation row layout (`N x 2K`,
/// `[Re H, Im H]`) together with the inner solve diagnostics.
pub fn solve_mahalanobis_margin<S: Real>(
    constraints: &[CeConstraint<S>],
    spec: &MahalanobisSpec<S>,
    penalty: S,
    opts: &SolveOptions<S>,
) -> Result<(Array2<S>, SvmSolution<S>), SvmError> {
    let n = spec.num_antennas();
    let k_users = spec.num_users();
    let dim = 2 * k_users * n;

    let mut features = Array2::zeros((constraints.len(), dim));
    let mut labels = Array1::zeros(constraints.len());
    for (ci, con) in constraints.iter().enumerate() {
        if con.antenna >= n {
            return Err(SvmError::AntennaOutOfRange {
                index: ci,
                antenna: con.antenna,
                n,
            });
        }
        if con.point.len() != 2 * k_users {
            return Err(SvmError::InvalidProblem(format!(
                "constraint {ci} has point length {}, expected {}",
                con.point.len(),
                2 * k_users
            )));
        }
        labels[ci] = con.label;
        // In the stacked column vector h_k = [Re h_k; Im h_k], the constraint
        // touches entries `antenna` and `N + antenna` with coefficients
        // point[k] and point[K + k]. Whitened, that is a combination of two
        // columns of C_k^{1/2}.
        for k in 0..k_users {
            let root = spec.sqrt_factor(k);
            let (a, b) = (con.point[k], con.point[k + k_users]);
            let base = 2 * n * k;
            for r in 0..2 * n {
                features[[ci, base + r]] =
                    a * root[[r, con.antenna]] + b * root[[r, n + con.antenna]];
            }
        }
    }

    let problem = SvmProblem::new(features, labels, penalty)?;
    let solution = solve_soft_margin(&problem, opts);

    // Unwhiten: h_k = C_k^{1/2} u_k, then scatter columns back into rows.
    let mut h_rows = Array2::zeros((n, 2 * k_users));
    for k in 0..k_users {
        let root = spec.sqrt_factor(k);
        let base = 2 * n * k;
        for r in 0..2 * n {
            let mut acc = S::zero();
            for cidx in 0..2 * n {
                acc += root[[r, cidx]] * solution.weights[base + cidx];
            }
            if r < n {
                h_rows[[r, k]] = acc;
            } else {
                h_rows[[r - n, k + k_users]] = acc;
            }
        }
    }
    Ok((h_rows, solution))
}
