//! Floating-point scalar abstraction: f32 or f64.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type the simulation core is generic over.
///
/// Config files and data files are parsed as `f64` and converted, so the
/// only hard requirement beyond `Float` is primitive conversion both ways.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Convert an `f64` literal/config value into the working scalar.
#[inline]
pub fn cast<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 converts into scalar")
}

/// Convert the working scalar back to `f64` (for reporting and serialization).
#[inline]
pub fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().expect("scalar converts into f64")
}
