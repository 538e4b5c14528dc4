//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar type the geometry, information and optimization code is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances quoted in the documentation are
/// stated for `f64`; see [`tolerance`] for how they are floored for narrower types.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("f64 literal representable in scalar type")
}

/// A relative tolerance of `nominal`, floored at a small multiple of the
/// machine epsilon of `T` so that `f64` thresholds stay meaningful for `f32`.
#[inline]
pub fn tolerance<T: Scalar>(nominal: f64) -> T {
    lit::<T>(nominal).max(T::epsilon() * lit(64.0))
}

/// Lossy conversion to `f64`, used for diagnostics and error payloads.
#[inline]
pub fn to_f64<T: Scalar>(value: T) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Scalar>(angle: T) -> T {
    if !angle.is_finite() {
        return angle;
    }
    let two_pi = T::PI() + T::PI();
    let mut wrapped = angle % two_pi;
    if wrapped <= -T::PI() {
        wrapped += two_pi;
    } else if wrapped > T::PI() {
        wrapped -= two_pi;
    }
    wrapped
}
