//! Scalar abstraction shared by the numeric core.
//!
//! Everything that is pure arithmetic (the `E`/`EI` recurrences, radius
//! formulas) is written against [`num_traits::Num`] so it also runs on exact
//! rationals. Code that needs square roots or transcendental functions uses
//! [`Scalar`], implemented for `f32` and `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    'static
    + Float
    + NumAssign
    + FromPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
{
    /// Machine epsilon of the type.
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal to `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count to `T`.
#[inline]
pub fn from_usize<T: Scalar>(x: usize) -> T {
    T::from_usize(x).expect("count representable in scalar type")
}

/// Builds the integer `i` inside any ring by repeated addition of one.
///
/// Used by the exact (rational-capable) formulas, where `FromPrimitive` is not
/// assumed.
pub(crate) fn ring_int<T: num_traits::Num + Clone>(i: u64) -> T {
    let mut acc = T::zero();
    for _ in 0..i {
        acc = acc + T::one();
    }
    acc
}

/// `x^e` by repeated multiplication.
pub(crate) fn ring_pow<T: num_traits::Num + Clone>(x: &T, e: u32) -> T {
    let mut acc = T::one();
    for _ in 0..e {
        acc = acc * x.clone();
    }
    acc
}

pub(crate) fn ring_max<T: PartialOrd>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}
