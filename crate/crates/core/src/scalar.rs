//! Floating-point element types.
//!
//! `f32` is the working precision for training and inference; `f64` is used
//! for gradient checks and for bit-exact equivariance checks that should not
//! be clouded by single-precision rounding.

use core::cmp::Ordering;
use core::fmt::{Debug, Display};

use num_traits::Float;

pub trait Scalar:
    Float + Default + Debug + Display + Send + Sync + core::iter::Sum + 'static
{
    const NAME: &'static str;

    fn from_f64(v: f64) -> Self;

    fn to_f64(self) -> f64;

    fn from_usize(v: usize) -> Self {
        Self::from_f64(v as f64)
    }

    /// Total order over bit patterns (distinguishes `-0.0` from `0.0`).
    fn total_cmp(&self, other: &Self) -> Ordering;

    /// `exp` from libm, whatever features `num-traits` was built with.
    fn libm_exp(self) -> Self;

    fn libm_ln(self) -> Self;

    fn libm_ln_1p(self) -> Self;

    /// Row-major GEMM: `c = a·b + beta·c`, with strides as in BLAS.
    ///
    /// # Safety
    /// Pointers and strides must describe in-bounds `m×k`, `k×n` and `m×n`
    /// matrices.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        f32::total_cmp(self, other)
    }

    fn libm_exp(self) -> Self {
        libm::expf(self)
    }

    fn libm_ln(self) -> Self {
        libm::logf(self)
    }

    fn libm_ln_1p(self) -> Self {
        libm::log1pf(self)
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }

    fn libm_exp(self) -> Self {
        libm::exp(self)
    }

    fn libm_ln(self) -> Self {
        libm::log(self)
    }

    fn libm_ln_1p(self) -> Self {
        libm::log1p(self)
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}
