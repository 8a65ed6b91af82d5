//! Scalar abstraction shared by the probability and bound computations.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the numeric code is generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a literal. Panics only for values the type cannot represent at all.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("value representable in scalar type")
    }

    fn of_u64(n: u64) -> Self {
        Self::from_u64(n).expect("integer representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// True when `x` lies in the closed unit interval (NaN is rejected).
pub fn is_probability<T: Scalar>(x: T) -> bool {
    x >= T::zero() && x <= T::one()
}
