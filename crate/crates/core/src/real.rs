//! Scalar abstraction for the numeric core.
//!
//! All solvers and signal models are generic over [`Real`], which bundles the
//! floating-point behaviour they rely on: `num_traits::Float` arithmetic, FFT
//! support, and sampling of standard normal / uniform variates. `f32` and
//! `f64` are the two implementors.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

pub trait Real:
    Float + FromPrimitive + NumAssignOps + Sum + rustfft::FftNum + fmt::Display + fmt::LowerExp
{
    /// Lossy conversion from `f64`, used for literal constants.
    fn of(v: f64) -> Self;

    fn as_f64(self) -> f64;

    /// One draw from N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw from U[0, 1).
    fn standard_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn of(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn standard_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardUniform.sample(rng)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
