//! Scalar abstraction for f32/f64 generic numerics.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point scalar usable throughout the simulation stack.
///
/// `nalgebra::RealField` is required for the dense eigensolver path,
/// everything else sticks to `num_traits`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + nalgebra::RealField
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an f64 literal into `T`, panicking on unrepresentable input.
///
/// Intended for compile-time constants; every value passed in source is
/// finite and within f32 range.
pub fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("literal out of scalar range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_round_trips_f64() {
        assert_eq!(lit::<f64>(0.45), 0.45);
        assert_eq!(lit::<f32>(1.5), 1.5f32);
    }

    #[test]
    fn float_ops_resolve() {
        fn probe<T: Scalar>() -> T {
            let x = lit::<T>(2.0);
            Float::sqrt(x) + Float::exp(T::zero())
        }
        assert!((probe::<f64>() - (std::f64::consts::SQRT_2 + 1.0)).abs() < 1e-15);
    }
}
