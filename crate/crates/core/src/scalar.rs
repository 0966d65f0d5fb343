//! Floating-point element type shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Element type of tensors, filter banks and retrieval embeddings.
///
/// Implemented for `f32` and `f64`. The training harness and the on-disk
/// archive use `f64`; the selection and accounting code runs on either.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for literals and sampled values.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Euclidean distance between two equal-length slices, summed in index order.
pub fn l2_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc.sqrt()
}

pub fn l2_norm<T: Scalar>(a: &[T]) -> T {
    let mut acc = T::zero();
    for &x in a {
        acc += x * x;
    }
    acc.sqrt()
}

pub fn l1_norm<T: Scalar>(a: &[T]) -> T {
    let mut acc = T::zero();
    for &x in a {
        acc += x.abs();
    }
    acc
}
