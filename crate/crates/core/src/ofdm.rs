//! Frequency-selective extension: cyclic-prefix OFDM over L-tap channels.
//!
//! The per-antenna time-domain receive model is
//! `y_i = sign(sum_k G_{i,k} F^H x_k + z_i)` with `G_{i,k}` the circulant
//! matrix of the zero-padded taps. Channel estimation lifts the first-L-column
//! pilot circulants into one real SVM per antenna; detection solves a single
//! joint SVM over all subcarriers with the rows of the real-lifted `G^FD` as
//! training points. The DFT is unitary (`1/sqrt(Nc)`), keeping symbol power
//! conventions consistent.

use std::sync::Arc;

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use thiserror::Error;

use crate::channel::{awgn, Constellation};
use crate::lifting::{one_bit_quantize, stack_complex_mult, QuantizedMatrix};
use crate::real::Real;
use crate::svm::{solve_soft_margin, SolveOptions, SvmError, SvmProblem};

#[derive(Debug, Error)]
pub enum OfdmError {
    #[error("invalid OFDM config: {0}")]
    BadConfig(String),
    #[error("underdetermined estimation: 2*Nc = {constraints} < 2*K*L = {unknowns}")]
    Underdetermined { constraints: usize, unknowns: usize },
    #[error(transparent)]
    Svm(#[from] SvmError),
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct OfdmConfig {
    /// Subcarrier count (power of two).
    pub nc: usize,
    /// Cyclic-prefix length; `L - 1 <= Ncp <= Nc`.
    pub ncp: usize,
    /// Channel tap count.
    pub l: usize,
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<(), OfdmError> {
        if self.nc == 0 || !self.nc.is_power_of_two() {
            return Err(OfdmError::BadConfig(format!(
                "Nc = {} must be a power of two",
                self.nc
            )));
        }
        if self.l == 0 || self.l > self.nc {
            return Err(OfdmError::BadConfig(format!("L = {} out of range", self.l)));
        }
        if self.ncp + 1 < self.l || self.ncp > self.nc {
            return Err(OfdmError::BadConfig(format!(
                "need L - 1 <= Ncp <= Nc, got L = {}, Ncp = {}, Nc = {}",
                self.l, self.ncp, self.nc
            )));
        }
        Ok(())
    }
}

/// Circulant matrix whose first column is `first_column`; column j is the
/// first column cyclically shifted down by j.
pub fn circulant<S: Real>(first_column: &Array1<Complex<S>>) -> Array2<Complex<S>> {
    let n = first_column.len();
    Array2::from_shape_fn((n, n), |(i, j)| first_column[(n + i - j) % n])
}

/// Cached unitary DFT pair of one size.
pub struct UnitaryDft<S> {
    forward: Arc<dyn Fft<S>>,
    inverse: Arc<dyn Fft<S>>,
    size: usize,
}

impl<S: Real> UnitaryDft<S> {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft(size, FftDirection::Forward),
            inverse: planner.plan_fft(size, FftDirection::Inverse),
            size,
        }
    }

    /// `F x` with the 1/sqrt(Nc) normalization.
    pub fn dft(&self, x: &Array1<Complex<S>>) -> Array1<Complex<S>> {
        let mut buf: Vec<Complex<S>> = x.to_vec();
        self.forward.process(&mut buf);
        let s = S::one() / S::of(self.size as f64).sqrt();
        Array1::from_iter(buf.into_iter().map(|z| z * s))
    }

    /// `F^H x` with the 1/sqrt(Nc) normalization.
    pub fn idft(&self, x: &Array1<Complex<S>>) -> Array1<Complex<S>> {
        let mut buf: Vec<Complex<S>> = x.to_vec();
        self.inverse.process(&mut buf);
        let s = S::one() / S::of(self.size as f64).sqrt();
        Array1::from_iter(buf.into_iter().map(|z| z * s))
    }

    /// Unnormalized DFT, i.e. the circulant eigenvalues of a first column.
    pub fn eigenvalues(&self, first_column: &Array1<Complex<S>>) -> Array1<Complex<S>> {
        let mut buf: Vec<Complex<S>> = first_column.to_vec();
        self.forward.process(&mut buf);
        Array1::from_vec(buf)
    }

    /// Circular convolution `circulant(c) x` via the FFT diagonalization.
    pub fn circular_multiply(
        &self,
        first_column: &Array1<Complex<S>>,
        x: &Array1<Complex<S>>,
    ) -> Array1<Complex<S>> {
        let lam = self.eigenvalues(first_column);
        let mut buf: Vec<Complex<S>> = x.to_vec();
        self.forward.process(&mut buf);
        for (b, l) in buf.iter_mut().zip(lam.iter()) {
            *b *= *l;
        }
        self.inverse.process(&mut buf);
        let s = S::one() / S::of(self.size as f64);
        Array1::from_iter(buf.into_iter().map(|z| z * s))
    }
}

fn padded_taps<S: Real>(taps: &Array3<Complex<S>>, i: usize, k: usize, nc: usize) -> Array1<Complex<S>> {
    let l = taps.dim().2;
    Array1::from_shape_fn(nc, |n| {
        if n < l {
            taps[[i, k, n]]
        } else {
            Complex::new(S::zero(), S::zero())
        }
    })
}

/// Simulate one quantized OFDM reception: returns the N x Nc sign matrix
/// (row i is antenna i's time-domain observation). CP insertion/removal is
/// implicit in the circulant model.
pub fn simulate_ofdm_rx<S: Real, R: Rng + ?Sized>(
    cfg: &OfdmConfig,
    taps: &Array3<Complex<S>>,
    x_fd: &Array2<Complex<S>>,
    n0: S,
    rng: &mut R,
) -> Result<QuantizedMatrix<S>, OfdmError> {
    cfg.validate()?;
    let (n, k_users, _) = taps.dim();
    if x_fd.dim() != (k_users, cfg.nc) {
        return Err(OfdmError::BadConfig(format!(
            "frequency-domain symbols have shape {:?}, expected ({k_users}, {})",
            x_fd.dim(),
            cfg.nc
        )));
    }
    let dft = UnitaryDft::new(cfg.nc);
    let phis: Vec<Array1<Complex<S>>> = (0..k_users)
        .map(|k| dft.idft(&x_fd.row(k).to_owned()))
        .collect();
    let mut r = awgn(n, cfg.nc, n0, rng);
    for i in 0..n {
        for (k, phi) in phis.iter().enumerate() {
            let g = padded_taps(taps, i, k, cfg.nc);
            let contrib = dft.circular_multiply(&g, phi);
            for (dst, v) in r.row_mut(i).iter_mut().zip(contrib.iter()) {
                *dst += *v;
            }
        }
    }
    Ok(one_bit_quantize(&r))
}

/// Per-antenna tap estimate plus convergence bookkeeping.
#[derive(Debug, Clone)]
pub struct OfdmChannelEstimate<S> {
    /// Estimated taps, (N, K, L); each antenna satisfies
    /// `sum_{k,l} |h_{i,k,l}|^2 = K` exactly unless flagged.
    pub taps: Array3<Complex<S>>,
    pub per_antenna_converged: Vec<bool>,
    pub flagged_antennas: usize,
}

/// Build the real feature matrix of the estimation SVM: rows are the 2Nc
/// lifted rows of `[Phi_{1,L}, ..., Phi_{K,L}]` (first L columns of each
/// per-user pilot circulant).
fn ce_feature_matrix<S: Real>(
    cfg: &OfdmConfig,
    pilot_fd: &Array2<Complex<S>>,
) -> Array2<S> {
    let k_users = pilot_fd.nrows();
    let nc = cfg.nc;
    let dft = UnitaryDft::new(nc);
    let mut phi = Array2::zeros((nc, k_users * cfg.l));
    for k in 0..k_users {
        let td = dft.idft(&pilot_fd.row(k).to_owned());
        let circ = circulant(&td);
        for l in 0..cfg.l {
            for n in 0..nc {
                phi[[n, k * cfg.l + l]] = circ[[n, l]];
            }
        }
    }
    stack_complex_mult(&phi)
}

/// Estimate the taps of every antenna from one pilot OFDM symbol.
pub fn svm_ce_ofdm<S: Real>(
    cfg: &OfdmConfig,
    y_td: &QuantizedMatrix<S>,
    pilot_fd: &Array2<Complex<S>>,
    penalty: S,
    opts: &SolveOptions<S>,
) -> Result<OfdmChannelEstimate<S>, OfdmError> {
    cfg.validate()?;
    let k_users = pilot_fd.nrows();
    let n_ant = y_td.rows();
    let constraints = 2 * cfg.nc;
    let unknowns = 2 * k_users * cfg.l;
    if constraints < unknowns {
        return Err(OfdmError::Underdetermined {
            constraints,
            unknowns,
        });
    }
    let features = ce_feature_matrix(cfg, pilot_fd);
    let y = y_td.as_complex();

    let per_antenna: Vec<(Array1<S>, bool)> = (0..n_ant)
        .into_par_iter()
        .map(|i| {
            let labels = Array1::from_shape_fn(2 * cfg.nc, |q| {
                if q < cfg.nc {
                    y[[i, q]].re
                } else {
                    y[[i, q - cfg.nc]].im
                }
            });
            let problem = SvmProblem::new(features.clone(), labels, penalty)?;
            let sol = solve_soft_margin(&problem, opts);
            Ok((sol.weights, sol.converged))
        })
        .collect::<Result<_, SvmError>>()?;

    let kl = k_users * cfg.l;
    let mut taps = Array3::zeros((n_ant, k_users, cfg.l));
    let mut per_antenna_converged = Vec::with_capacity(n_ant);
    let mut flagged_antennas = 0;
    let target = S::of(k_users as f64).sqrt();
    for (i, (w, converged)) in per_antenna.into_iter().enumerate() {
        let norm = w.dot(&w).sqrt();
        if norm == S::zero() {
            flagged_antennas += 1;
        } else {
            for k in 0..k_users {
                for l in 0..cfg.l {
                    let idx = k * cfg.l + l;
                    taps[[i, k, l]] =
                        Complex::new(w[idx], w[idx + kl]) * (target / norm);
                }
            }
        }
        per_antenna_converged.push(converged);
    }
    Ok(OfdmChannelEstimate {
        taps,
        per_antenna_converged,
        flagged_antennas,
    })
}

/// Assemble the real-lifted joint detection matrix `G^FD`
/// (2 N Nc x 2 K Nc) from a set of taps. Column blocks follow the stacked
/// per-user frequency-domain symbol vector.
pub fn build_g_fd<S: Real>(cfg: &OfdmConfig, taps: &Array3<Complex<S>>) -> Array2<S> {
    let (n_ant, k_users, _) = taps.dim();
    let nc = cfg.nc;
    let dft = UnitaryDft::new(nc);
    let inv_sqrt = S::one() / S::of(nc as f64).sqrt();
    let mut g = Array2::zeros((n_ant * nc, k_users * nc));
    for i in 0..n_ant {
        for k in 0..k_users {
            // G_{i,k} F^H = F^H diag(lambda): column j is lambda_j times the
            // j-th conjugate exponential, so no dense circulant is formed.
            let lam = dft.eigenvalues(&padded_taps(taps, i, k, nc));
            for j in 0..nc {
                let lj = lam[j] * inv_sqrt;
                for t in 0..nc {
                    let angle = S::of(2.0 * std::f64::consts::PI) * S::of((t * j % nc) as f64)
                        / S::of(nc as f64);
                    let e = Complex::new(angle.cos(), angle.sin());
                    g[[i * nc + t, k * nc + j]] = lj * e;
                }
            }
        }
    }
    stack_complex_mult(&g)
}

/// Joint SVM data detection over all subcarriers.
#[derive(Debug, Clone)]
pub struct OfdmDetection<S> {
    /// Detected symbol indices, K x Nc.
    pub indices: Array2<usize>,
    /// Soft frequency-domain estimate before slicing, K x Nc.
    pub soft: Array2<Complex<S>>,
    pub converged: bool,
}

pub fn svm_detect_ofdm<S: Real>(
    cfg: &OfdmConfig,
    y_td: &QuantizedMatrix<S>,
    g_fd_real: &Array2<S>,
    constellation: &Constellation<S>,
    penalty: S,
    opts: &SolveOptions<S>,
) -> Result<OfdmDetection<S>, OfdmError> {
    let n_ant = y_td.rows();
    let nc = cfg.nc;
    let k_users = g_fd_real.ncols() / (2 * nc);
    // labels: [Re of all antennas stacked; Im of all antennas stacked]
    let y = y_td.as_complex();
    let labels = Array1::from_shape_fn(2 * n_ant * nc, |q| {
        if q < n_ant * nc {
            y[[q / nc, q % nc]].re
        } else {
            let r = q - n_ant * nc;
            y[[r / nc, r % nc]].im
        }
    });
    let problem = SvmProblem::new(g_fd_real.clone(), labels, penalty)?;
    let sol = solve_soft_margin(&problem, opts);
    let w = sol.weights;
    let half = k_users * nc;
    let mut soft = Array2::zeros((k_users, nc));
    for k in 0..k_users {
        for j in 0..nc {
            soft[[k, j]] = Complex::new(w[k * nc + j], w[half + k * nc + j]);
        }
    }
    // normalize to unit average per-symbol power, then slice per subcarrier
    let power: S = soft.iter().map(|z| z.norm_sqr()).sum::<S>() / S::of(half as f64);
    if power > S::zero() {
        let scale = S::one() / power.sqrt();
        soft.mapv_inplace(|z| z * scale);
    }
    let indices = soft.mapv(|z| constellation.slice(z));
    Ok(OfdmDetection {
        indices,
        soft,
        converged: sol.converged,
    })
}
