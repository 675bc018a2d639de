use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point element type for embeddings and network parameters: f32 or f64.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every float scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float scalar converts to f64")
    }

    fn from_f32_lossy(v: f32) -> Self {
        Self::from_f32(v).expect("f32 converts to every float scalar")
    }

    fn to_f32_lossy(self) -> f32 {
        self.to_f32().expect("float scalar converts to f32")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `-log(sigmoid(x))`, stable for large |x|.
#[inline]
pub fn neg_log_sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}
