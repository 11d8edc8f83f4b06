//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the model is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + rustfft::FftNum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Imaginary unit for a generic scalar.
#[inline]
pub fn i<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// `exp(i θ)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}
