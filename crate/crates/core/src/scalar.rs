use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the numerical code is generic over.
///
/// Implemented for `f32` and `f64`. Density estimation and training are
/// meant to run in `f64`; `f32` is supported for experimentation and for
/// checking precision sensitivity.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
