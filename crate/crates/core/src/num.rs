//! Scalar abstraction shared by every learner in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar: `f32` or `f64`.
pub trait Float:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    fn of(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal fits every Float")
    }

    /// Converts a count.
    fn of_usize(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("usize fits every Float")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Float for f32 {}
impl Float for f64 {}

/// Sums values after sorting them, so the result does not depend on input order.
pub fn sorted_sum<F: Float>(values: &mut [F]) -> F {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut iter = values.iter();
    let Some(&first) = iter.next() else {
        return F::zero();
    };
    iter.fold(first, |acc, &v| acc + v)
}

/// Midpoint of two ordered values `lo < hi` that is guaranteed to satisfy `lo <= mid < hi`.
pub(crate) fn midpoint<F: Float>(lo: F, hi: F) -> F {
    let two = F::one() + F::one();
    let mid = lo / two + hi / two;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}
