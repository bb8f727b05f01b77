//! Complex-to-real conversions used by the estimation and detection paths.
//!
//! Two distinct stacking conventions appear:
//!
//! * channel estimation stacks real and imaginary parts side-by-side
//!   (`Y_t = [Re Y, Im Y]`, pilots get the 2x2 block rotation layout), so each
//!   channel row acts as an SVM weight vector;
//! * data detection stacks them on top of each other
//!   (`y_d = [Re y; Im y]`, channel becomes `[Re, -Im; Im, Re]`), so each data
//!   column acts as the weight vector.
//!
//! All liftings are materialized; sizes at desk scale are small.

use ndarray::{Array1, Array2};
use num_complex::Complex;
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("dimension mismatch: {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },
}

fn dim_err(context: &'static str, expected: (usize, usize), got: (usize, usize)) -> LiftError {
    LiftError::DimensionMismatch {
        context,
        expected: format!("{}x{}", expected.0, expected.1),
        got: format!("{}x{}", got.0, got.1),
    }
}

/// Element-wise one-bit quantization: `sign(Re) + j sign(Im)` with
/// `sign(0) = +1`. Zero inputs do occur (axis constellation points at zero
/// noise), so the tie rule is part of the contract.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMatrix<S> {
    entries: Array2<Complex<S>>,
}

impl<S: Real> QuantizedMatrix<S> {
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// The quantized entries as a complex matrix with components in {+1, -1}.
    pub fn as_complex(&self) -> &Array2<Complex<S>> {
        &self.entries
    }
}

#[inline]
fn sign<S: Real>(a: S) -> S {
    if a >= S::zero() {
        S::one()
    } else {
        -S::one()
    }
}

pub fn one_bit_quantize<S: Real>(r: &Array2<Complex<S>>) -> QuantizedMatrix<S> {
    QuantizedMatrix {
        entries: r.mapv(|z| Complex::new(sign(z.re), sign(z.im))),
    }
}

/// Real forms for channel estimation (side-by-side stacking).
#[derive(Debug, Clone)]
pub struct CeRealForms<S> {
    /// `[Re Y_t, Im Y_t]`, N x 2T_t, entries in {+1, -1}; row i is the label
    /// vector of antenna i.
    pub y_t: Array2<S>,
    /// `[[Re X; -Im X], [Im X; Re X]]`, 2K x 2T_t; columns are training points.
    pub x_t: Array2<S>,
    /// `[Re H, Im H]`, N x 2K, present when the true channel was supplied.
    pub h_t: Option<Array2<S>>,
}

/// Side-by-side lifting of an arbitrary complex matrix: `[Re A, Im A]`.
pub fn stack_side_by_side<S: Real>(a: &Array2<Complex<S>>) -> Array2<S> {
    let (r, c) = a.dim();
    let mut out = Array2::zeros((r, 2 * c));
    for i in 0..r {
        for j in 0..c {
            out[[i, j]] = a[[i, j]].re;
            out[[i, j + c]] = a[[i, j]].im;
        }
    }
    out
}

/// Top-stacked lifting of an arbitrary complex matrix: `[Re A; Im A]`.
pub fn stack_on_top<S: Real>(a: &Array2<Complex<S>>) -> Array2<S> {
    let (r, c) = a.dim();
    let mut out = Array2::zeros((2 * r, c));
    for i in 0..r {
        for j in 0..c {
            out[[i, j]] = a[[i, j]].re;
            out[[i + r, j]] = a[[i, j]].im;
        }
    }
    out
}

/// Block-rotation lifting `[Re A, Im A; -Im A, Re A]` used for pilot matrices.
pub fn stack_rotation<S: Real>(a: &Array2<Complex<S>>) -> Array2<S> {
    let (r, c) = a.dim();
    let mut out = Array2::zeros((2 * r, 2 * c));
    for i in 0..r {
        for j in 0..c {
            let z = a[[i, j]];
            out[[i, j]] = z.re;
            out[[i, j + c]] = z.im;
            out[[i + r, j]] = -z.im;
            out[[i + r, j + c]] = z.re;
        }
    }
    out
}

/// Block lifting `[Re A, -Im A; Im A, Re A]` (channel in the detection layout,
/// and the real form of a complex covariance).
pub fn stack_complex_mult<S: Real>(a: &Array2<Complex<S>>) -> Array2<S> {
    let (r, c) = a.dim();
    let mut out = Array2::zeros((2 * r, 2 * c));
    for i in 0..r {
        for j in 0..c {
            let z = a[[i, j]];
            out[[i, j]] = z.re;
            out[[i, j + c]] = -z.im;
            out[[i + r, j]] = z.im;
            out[[i + r, j + c]] = z.re;
        }
    }
    out
}

/// Inverse of [`stack_side_by_side`]: `[Re A, Im A]` back to complex.
pub fn unstack_side_by_side<S: Real>(a: &Array2<S>) -> Result<Array2<Complex<S>>, LiftError> {
    let (r, c2) = a.dim();
    if c2 % 2 != 0 {
        return Err(dim_err("unstack_side_by_side", (r, c2 + 1), (r, c2)));
    }
    let c = c2 / 2;
    let mut out = Array2::zeros((r, c));
    for i in 0..r {
        for j in 0..c {
            out[[i, j]] = Complex::new(a[[i, j]], a[[i, j + c]]);
        }
    }
    Ok(out)
}

/// Inverse of [`stack_on_top`]: `[Re A; Im A]` back to complex.
pub fn unstack_on_top<S: Real>(a: &Array2<S>) -> Result<Array2<Complex<S>>, LiftError> {
    let (r2, c) = a.dim();
    if r2 % 2 != 0 {
        return Err(dim_err("unstack_on_top", (r2 + 1, c), (r2, c)));
    }
    let r = r2 / 2;
    let mut out = Array2::zeros((r, c));
    for i in 0..r {
        for j in 0..c {
            out[[i, j]] = Complex::new(a[[i, j]], a[[i + r, j]]);
        }
    }
    Ok(out)
}

/// `[Re v; Im v]` stacking of a complex vector.
pub fn stack_vec<S: Real>(v: &Array1<Complex<S>>) -> Array1<S> {
    let n = v.len();
    let mut out = Array1::zeros(2 * n);
    for i in 0..n {
        out[i] = v[i].re;
        out[i + n] = v[i].im;
    }
    out
}

/// Inverse of [`stack_vec`].
pub fn unstack_vec<S: Real>(v: &Array1<S>) -> Array1<Complex<S>> {
    let n = v.len() / 2;
    Array1::from_iter((0..n).map(|i| Complex::new(v[i], v[i + n])))
}

/// Build the channel-estimation real forms from the quantized pilot
/// observation and the complex pilot matrix.
pub fn realify_ce<S: Real>(
    y_t: &QuantizedMatrix<S>,
    x_t: &Array2<Complex<S>>,
    h: Option<&Array2<Complex<S>>>,
) -> Result<CeRealForms<S>, LiftError> {
    let (k, t_t) = x_t.dim();
    if y_t.cols() != t_t {
        return Err(dim_err("realify_ce: Y_t vs X_t", (y_t.rows(), t_t), (y_t.rows(), y_t.cols())));
    }
    if let Some(h) = h {
        if h.dim() != (y_t.rows(), k) {
            return Err(dim_err("realify_ce: H", (y_t.rows(), k), h.dim()));
        }
    }
    Ok(CeRealForms {
        y_t: stack_side_by_side(y_t.as_complex()),
        x_t: stack_rotation(x_t),
        h_t: h.map(stack_side_by_side),
    })
}

/// Real forms for data detection (top stacking).
#[derive(Debug, Clone)]
pub struct DetRealForms<S> {
    /// `[Re Y_d; Im Y_d]`, 2N x T_d; column m is the label vector of slot m.
    pub y_d: Array2<S>,
    /// `[Re H, -Im H; Im H, Re H]`, 2N x 2K; rows are training points.
    pub h_d: Array2<S>,
    /// `[Re X_d; Im X_d]`, 2K x T_d, present when the data is known.
    pub x_d: Option<Array2<S>>,
}

/// Build the detection real forms from the quantized data observation and the
/// (estimated) channel.
pub fn realify_det<S: Real>(
    y_d: &QuantizedMatrix<S>,
    h: &Array2<Complex<S>>,
    x_d: Option<&Array2<Complex<S>>>,
) -> Result<DetRealForms<S>, LiftError> {
    let (n, k) = h.dim();
    if y_d.rows() != n {
        return Err(dim_err("realify_det: Y_d vs H", (n, y_d.cols()), (y_d.rows(), y_d.cols())));
    }
    if let Some(x) = x_d {
        if x.nrows() != k || x.ncols() != y_d.cols() {
            return Err(dim_err("realify_det: X_d", (k, y_d.cols()), x.dim()));
        }
    }
    Ok(DetRealForms {
        y_d: stack_on_top(y_d.as_complex()),
        h_d: stack_complex_mult(h),
        x_d: x_d.map(stack_on_top),
    })
}

/// Detection-layout lift of a single channel matrix without an observation,
/// for perfect-CSI detection paths.
pub fn lift_channel_det<S: Real>(h: &Array2<Complex<S>>) -> Array2<S> {
    stack_complex_mult(h)
}
