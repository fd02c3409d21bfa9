//! Scalar abstraction for the numeric kernels.

use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the tensor and solver kernels are generic over.
///
/// Implemented by `f32` and `f64`; the crate root exports `f64` aliases for
/// the common types.
pub trait Real: nalgebra::RealField + Copy + FromPrimitive + ToPrimitive {}

impl<T> Real for T where T: nalgebra::RealField + Copy + FromPrimitive + ToPrimitive {}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<S: Real>(x: f64) -> S {
    S::from_f64(x).expect("constant not representable in scalar type")
}
