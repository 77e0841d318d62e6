//! Scalar abstraction for the numeric core.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

/// Floating-point scalar the library is generic over.
///
/// Implemented for `f32` and `f64` through the blanket impl; all tolerances
/// and defaults in the crate are stated in `f64` and converted with
/// [`Scalar::cast`].
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn cast(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("constant representable in scalar type")
    }

    /// Widens to `f64` (lossless for f32/f64).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar widens to f64")
    }

    /// Converts a dimension count.
    fn from_count(x: usize) -> Self {
        <Self as FromPrimitive>::from_usize(x).expect("count representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + LowerExp
        + FromStr
        + Send
        + Sync
        + 'static
{
}
