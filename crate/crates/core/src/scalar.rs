//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::{Serialize, Serializer};

/// Floating point type the threshold machinery is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances inside the solvers are
/// expressed in multiples of [`Float::epsilon`] so the same code works at
/// either precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this type.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Relative tolerance: `k` machine epsilons.
#[inline]
pub(crate) fn eps<T: Scalar>(k: f64) -> T {
    T::epsilon() * T::lit(k)
}

/// Serializes a scalar as a JSON number with 17 significant digits.
pub(crate) fn sig17<T: Scalar, S: Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
    let text = format!("{:.16e}", x.as_f64());
    match serde_json::Number::from_str(&text) {
        Ok(n) => n.serialize(s),
        Err(_) => s.serialize_f64(x.as_f64()),
    }
}
