//! Scalar abstractions.
//!
//! Quadrature code is generic over [`Real`] (implemented for `f32` and
//! `f64`); exact linear algebra such as the Gaussian moment fit is generic
//! over [`FieldScalar`], which covers `BigRational` as well as the floats.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used by the quadrature routines.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A field with an embedding of the integers.
pub trait FieldScalar:
    Clone + Debug + PartialEq + num_traits::Num + std::ops::Neg<Output = Self>
{
    fn from_bigint(n: &BigInt) -> Self;
}

impl FieldScalar for BigRational {
    fn from_bigint(n: &BigInt) -> Self {
        BigRational::from_integer(n.clone())
    }
}

impl FieldScalar for f64 {
    fn from_bigint(n: &BigInt) -> Self {
        n.to_f64().unwrap_or(f64::NAN)
    }
}

impl FieldScalar for f32 {
    fn from_bigint(n: &BigInt) -> Self {
        n.to_f32().unwrap_or(f32::NAN)
    }
}
