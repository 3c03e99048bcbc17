//! Safe wrapper over the blocked GEMM used by the training-mode convolution.

use crate::Scalar;

/// Storage of a row-major matrix operand.
#[derive(Clone, Copy, Debug)]
pub enum Layout {
    /// Stored as written (`rows × cols`).
    Normal,
    /// Stored transposed (`cols × rows` in memory).
    Transposed,
}

/// `c (m×n) = a (m×k) · b (k×n) + beta·c`.
///
/// Panics if a slice is too short for the requested geometry.
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    a_layout: Layout,
    b: &[T],
    b_layout: Layout,
    beta: T,
    c: &mut [T],
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = match a_layout {
        Layout::Normal => (k as isize, 1),
        Layout::Transposed => (1, m as isize),
    };
    let (rsb, csb) = match b_layout {
        Layout::Normal => (n as isize, 1),
        Layout::Transposed => (1, k as isize),
    };
    // SAFETY: the assertion above bounds every index the kernel touches.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        )
    }
}
