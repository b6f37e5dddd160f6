//! Floating-point abstraction shared by every numerical kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the solvers are generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Every supported type can represent (a rounding of) it.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dense vector kernels on slices.
pub mod vec {
    use super::Scalar;

    #[inline]
    pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&x, &y)| x * y).sum()
    }

    #[inline]
    pub fn norm2<T: Scalar>(a: &[T]) -> T {
        dot(a, a).sqrt()
    }

    /// `y += a * x`
    #[inline]
    pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), y.len());
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi += a * xi;
        }
    }

    pub fn scale<T: Scalar>(a: T, x: &[T]) -> Vec<T> {
        x.iter().map(|&v| a * v).collect()
    }

    pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(&x, &y)| x - y).collect()
    }

    pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(&x, &y)| x + y).collect()
    }

    /// `a*x + b*y`
    pub fn lincomb<T: Scalar>(a: T, x: &[T], b: T, y: &[T]) -> Vec<T> {
        x.iter().zip(y).map(|(&u, &v)| a * u + b * v).collect()
    }

    pub fn max_abs<T: Scalar>(a: &[T]) -> T {
        a.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn all_finite<T: Scalar>(a: &[T]) -> bool {
        a.iter().all(|v| v.is_finite())
    }
}
