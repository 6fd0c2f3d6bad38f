//! Scalar abstraction shared by every algorithm in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the dissimilarity and cost computations run in.
///
/// Implemented for `f32` and `f64`. All tie handling compares computed
/// values exactly, so the same inputs give the same decisions for a given
/// scalar type but not necessarily across types.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion used for literals and generator output.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("count representable in scalar type")
    }

    fn of_u64(x: u64) -> Self {
        Self::from_u64(x).expect("weight representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
