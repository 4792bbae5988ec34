//! Numeric abstraction for coordinates, distances and costs.
//!
//! Times are always integer seconds; everything that is a length or a cost is
//! carried in a [`Scalar`], so the routing and assignment layers can run on
//! `f64`, `f32` or an exact rational.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Exact rational scalar used by oracle tests and exact cost bookkeeping.
pub type Rational = Ratio<i64>;

pub trait Scalar:
    Num
    + Copy
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Euclidean norm of `(dx, dy)`.
    fn hypot(dx: Self, dy: Self) -> Self;

    fn is_finite_value(self) -> bool;

    /// Lossy conversion used for reporting. Never fails for the provided impls.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::zero)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn hypot(dx: Self, dy: Self) -> Self {
                dx.hypot(dy)
            }

            #[inline]
            fn is_finite_value(self) -> bool {
                self.is_finite()
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for Rational {
    /// Rationals have no exact square root; the norm is approximated through
    /// `f64`. Exact work with rationals should use a matrix travel provider.
    fn hypot(dx: Self, dy: Self) -> Self {
        let value = dx.as_f64().hypot(dy.as_f64());
        Ratio::approximate_float(value).unwrap_or_else(Ratio::default)
    }

    fn is_finite_value(self) -> bool {
        *self.denom() != 0
    }

    fn from_f64_lossy(value: f64) -> Self {
        Ratio::approximate_float(value).unwrap_or_else(Ratio::default)
    }
}
