//! Scalar abstraction for the geometry and eigen-analysis code.

use nalgebra as na;
use num_traits as nt;

/// Floating point type usable by the generic math in this crate (`f32` or `f64`).
pub trait Real:
    na::RealField + Copy + nt::FromPrimitive + nt::ToPrimitive + Send + Sync + std::iter::Sum
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    /// Lossy conversion to `f64`.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <Self as nt::ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Tolerance used when checking that a vector has unit length.
    ///
    /// `1e-9` for `f64`; for lower precision types it widens to a few ulps.
    fn unit_tolerance() -> Self {
        let eps = Self::default_epsilon() * Self::lit(16.0);
        let tol = Self::lit(1e-9);
        if eps > tol {
            eps
        } else {
            tol
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
