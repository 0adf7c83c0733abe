//! Scalar abstraction shared by every kernel.
//!
//! Arithmetic happens in the scalar type `T`; [`Precision`] only decides how a
//! value is rounded when it is written into a grid.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::fp16;
use crate::grid::Precision;

/// Floating point element type: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
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
    /// Converts from `f64`, rounding to nearest.
    fn cast(x: f64) -> Self;

    /// Widens to `f64` (exact for both implementors).
    fn widen(self) -> f64;

    /// Row-major `c = a * b` with `a: m x k`, `b: k x n`. Summation order is
    /// left to the backing kernel.
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], b: &[Self], c: &mut [Self]);

    /// Rounds `self` as it would be stored under `precision`.
    #[inline]
    fn store(self, precision: Precision) -> Self {
        match precision {
            Precision::Fp32 => self,
            Precision::Fp16Storage => Self::cast(fp16::round_fp16(self.widen())),
        }
    }
}

impl Scalar for f32 {
    #[inline]
    fn cast(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn widen(self) -> f64 {
        self as f64
    }

    fn gemm(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
        assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
        // SAFETY: slices are sized m*k, k*n and m*n by the caller; strides
        // describe dense row-major storage.
        unsafe {
            matrixmultiply::sgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                k as isize,
                1,
                b.as_ptr(),
                n as isize,
                1,
                0.0,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}

impl Scalar for f64 {
    #[inline]
    fn cast(x: f64) -> Self {
        x
    }

    #[inline]
    fn widen(self) -> f64 {
        self
    }

    fn gemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
        assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
        // SAFETY: see the f32 implementation.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                k as isize,
                1,
                b.as_ptr(),
                n as isize,
                1,
                0.0,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}
