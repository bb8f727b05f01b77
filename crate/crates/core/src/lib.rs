//! SVM-based channel estimation and data detection for one-bit massive MIMO.
//!
//! The library models an uplink with `K` single-antenna users and an `N`-antenna
//! base station whose receive chain keeps only the sign of the real and
//! imaginary parts of each sample. Channel estimation and data detection are
//! posed as soft-margin linear SVM problems in the real domain and solved by
//! dual coordinate descent. Flat i.i.d., spatially correlated, and L-tap
//! frequency-selective (OFDM) channels are covered, together with an
//! exhaustive maximum-likelihood detector and a Monte-Carlo experiment
//! harness.
//!
//! Core numerics are generic over the scalar type through [`real::Real`];
//! the crate-root aliases fix `f64` as the default precision.

pub mod channel;
pub mod detection;
pub mod estimation;
pub mod harness;
pub mod lifting;
pub mod linalg;
pub mod ofdm;
pub mod real;
pub mod svm;

use num_complex::Complex;

/// Default scalar precision used by the CLI and the experiment harness.
pub type Scalar = f64;
/// Complex number over the default scalar.
pub type Cplx = Complex<Scalar>;
/// Dense complex matrix over the default scalar.
pub type CMat = ndarray::Array2<Cplx>;
/// Dense complex vector over the default scalar.
pub type CVec = ndarray::Array1<Cplx>;
/// Dense real matrix over the default scalar.
pub type RMat = ndarray::Array2<Scalar>;
/// Dense real vector over the default scalar.
pub type RVec = ndarray::Array1<Scalar>;

pub use channel::{Constellation, ConstellationKind};
pub use real::Real;
