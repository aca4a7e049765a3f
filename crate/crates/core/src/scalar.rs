//! Scalar abstraction: everything numeric is generic over a real type `R`.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar the whole crate is generic over (f32 or f64).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Convert an f64 literal into `R`. Panics only if `R` cannot represent
/// ordinary constants, which cannot happen for f32/f64.
#[inline]
pub fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("numeric constant conversion")
}

#[cfg(test)]
#[inline]
pub(crate) fn cplx<R: Real>(re: f64, im: f64) -> Complex<R> {
    Complex::new(real(re), real(im))
}

/// i as a `Complex<R>`.
#[inline]
pub fn imag_unit<R: Real>() -> Complex<R> {
    Complex::new(R::zero(), R::one())
}
