//! Floating-point abstraction shared by the network, scaler and metrics.
//!
//! Everything numeric in the crate is written against [`Scalar`], which is
//! implemented for `f32` and `f64`. The trait also carries a strided matrix
//! product so the hot loops can dispatch to an optimized kernel per type
//! while the generic code stays unaware of it.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A strided view of a dense matrix stored in a flat slice.
///
/// Element `(r, c)` lives at `offset + r * row_stride + c * col_stride`.
#[derive(Debug, Clone, Copy)]
pub struct Strided<'a, T> {
    pub data: &'a [T],
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a, T> Strided<'a, T> {
    /// Row-major `rows x cols` block starting at `offset` with leading dimension `ld`.
    pub fn row_major(data: &'a [T], offset: usize, rows: usize, cols: usize, ld: usize) -> Self {
        Self { data, offset, rows, cols, row_stride: ld, col_stride: 1 }
    }

    /// The transpose of a row-major block, without copying.
    pub fn transposed(data: &'a [T], offset: usize, rows: usize, cols: usize, ld: usize) -> Self {
        // the stored block is (cols x rows) row-major; view it as (rows x cols)
        Self { data, offset, rows, cols, row_stride: 1, col_stride: ld }
    }

    fn last_index(&self) -> Option<usize> {
        if self.rows == 0 || self.cols == 0 {
            return None;
        }
        Some(self.offset + (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> T
    where
        T: Copy,
    {
        self.data[self.offset + r * self.row_stride + c * self.col_stride]
    }
}

/// Mutable counterpart of [`Strided`], used for the output of a product.
#[derive(Debug)]
pub struct StridedMut<'a, T> {
    pub data: &'a mut [T],
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a, T> StridedMut<'a, T> {
    pub fn row_major(data: &'a mut [T], offset: usize, rows: usize, cols: usize, ld: usize) -> Self {
        Self { data, offset, rows, cols, row_stride: ld, col_stride: 1 }
    }

    fn last_index(&self) -> Option<usize> {
        if self.rows == 0 || self.cols == 0 {
            return None;
        }
        Some(self.offset + (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride)
    }
}

/// Floating-point element type used throughout the crate.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Short type name used in diagnostics.
    const NAME: &'static str;

    /// `c = alpha * a * b + beta * c`. When `beta` is zero `c` is not read.
    ///
    /// Panics if the shapes disagree or a view reaches past its slice.
    fn gemm(alpha: Self, a: Strided<'_, Self>, b: Strided<'_, Self>, beta: Self, c: StridedMut<'_, Self>) {
        check_gemm(&a, &b, &c);
        gemm_reference(alpha, a, b, beta, c);
    }

    /// Lossless-enough conversion from `f64` literals and data.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

fn check_gemm<T>(a: &Strided<'_, T>, b: &Strided<'_, T>, c: &StridedMut<'_, T>) {
    assert_eq!(a.cols, b.rows, "gemm inner dimensions differ");
    assert_eq!(a.rows, c.rows, "gemm output rows differ");
    assert_eq!(b.cols, c.cols, "gemm output cols differ");
    if c.rows == 0 || c.cols == 0 {
        return;
    }
    if let Some(i) = a.last_index() {
        assert!(i < a.data.len(), "gemm lhs view out of bounds");
    }
    if let Some(i) = b.last_index() {
        assert!(i < b.data.len(), "gemm rhs view out of bounds");
    }
    if let Some(i) = c.last_index() {
        assert!(i < c.data.len(), "gemm output view out of bounds");
    }
}

/// Plain triple-loop product. Used for scalar types without a tuned kernel
/// and as an independent check of the tuned ones.
pub fn gemm_reference<T: Scalar>(alpha: T, a: Strided<'_, T>, b: Strided<'_, T>, beta: T, c: StridedMut<'_, T>) {
    for i in 0..c.rows {
        for j in 0..c.cols {
            let mut acc = T::zero();
            for k in 0..a.cols {
                acc += a.at(i, k) * b.at(k, j);
            }
            let idx = c.offset + i * c.row_stride + j * c.col_stride;
            c.data[idx] = if beta == T::zero() { alpha * acc } else { alpha * acc + beta * c.data[idx] };
        }
    }
}

macro_rules! tuned_gemm {
    ($t:ty, $kernel:path, $name:expr) => {
        impl Scalar for $t {
            const NAME: &'static str = $name;

            fn gemm(alpha: Self, a: Strided<'_, Self>, b: Strided<'_, Self>, beta: Self, c: StridedMut<'_, Self>) {
                check_gemm(&a, &b, &c);
                if c.rows == 0 || c.cols == 0 {
                    return;
                }
                if a.cols == 0 {
                    // empty inner dimension: c = beta * c
                    for i in 0..c.rows {
                        for j in 0..c.cols {
                            let idx = c.offset + i * c.row_stride + j * c.col_stride;
                            c.data[idx] = if beta == 0.0 { 0.0 } else { beta * c.data[idx] };
                        }
                    }
                    return;
                }
                // SAFETY: check_gemm verified that the furthest element of every
                // view lies inside its slice, and strides are non-negative, so
                // every address the kernel touches is in bounds. `c` is a unique
                // borrow, so it cannot alias `a` or `b`.
                unsafe {
                    $kernel(
                        c.rows,
                        a.cols,
                        c.cols,
                        alpha,
                        a.data.as_ptr().add(a.offset),
                        a.row_stride as isize,
                        a.col_stride as isize,
                        b.data.as_ptr().add(b.offset),
                        b.row_stride as isize,
                        b.col_stride as isize,
                        beta,
                        c.data.as_mut_ptr().add(c.offset),
                        c.row_stride as isize,
                        c.col_stride as isize,
                    );
                }
            }
        }
    };
}

tuned_gemm!(f32, matrixmultiply::sgemm, "f32");
tuned_gemm!(f64, matrixmultiply::dgemm, "f64");
