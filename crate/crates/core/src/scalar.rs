//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the crate is generic over: `f32` or `f64`.
///
/// `f64` is used for geometry, evaluation and gradient checking. `f32` halves
/// the cost of the dense layers during training.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
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
    /// Tolerance for "sums to one" checks on probability vectors.
    const SUM_TOL: f64;
    /// Short name written into checkpoints.
    const NAME: &'static str;

    /// Lossy conversion from an `f64` literal or value.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite scalar converts to f64")
    }
}

impl Real for f32 {
    const SUM_TOL: f64 = 1e-5;
    const NAME: &'static str = "f32";
}

impl Real for f64 {
    const SUM_TOL: f64 = 1e-9;
    const NAME: &'static str = "f64";
}
