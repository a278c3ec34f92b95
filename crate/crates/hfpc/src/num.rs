//! Generic scalar trait for the math core.

use nalgebra as na;
use num_traits as nt;

/// Scalar type the primitive, controller, and frame math is generic over.
///
/// Implemented for `f32` and `f64`; concrete aliases live at the crate root.
pub trait Real: na::RealField + nt::FromPrimitive + Copy {}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}
