//! Floating-point scalar abstraction shared by the numeric modules.
//!
//! The head, optimizer, topic-signature and metric code is written once over
//! [`Scalar`] and instantiated for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use serde::de::DeserializeOwned;
use serde::Serialize;

/// floating point: f32 or f64
pub trait Scalar:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant; exact for `f64`, rounded for `f32`.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable")
    }

    fn from_count(count: usize) -> Self {
        Self::from_usize(count).expect("count representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
