//! Safe strided matrix-matrix products on top of the scalar GEMM kernels.

use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Borrowed `rows x cols` operand with arbitrary strides.
#[derive(Clone, Copy, Debug)]
pub struct MatRef<'a, T> {
    data: &'a [T],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

impl<'a, T: Scalar> MatRef<'a, T> {
    /// Row-major view of `data`.
    pub fn new(data: &'a [T], rows: usize, cols: usize) -> Self {
        assert!(data.len() >= rows * cols, "MatRef: {} values for {rows}x{cols}", data.len());
        MatRef {
            data,
            rows,
            cols,
            rs: cols,
            cs: 1,
        }
    }

    pub fn t(self) -> Self {
        MatRef {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn in_bounds(&self) -> bool {
        self.rows == 0
            || self.cols == 0
            || (self.rows - 1) * self.rs + (self.cols - 1) * self.cs < self.data.len()
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn view(&self) -> MatRef<'_, T> {
        MatRef::new(self.as_slice(), self.rows(), self.cols())
    }
}

/// `C = alpha A B + beta C` with `C` row-major `a.rows() x b.cols()`.
/// When `beta` is zero, `C` is overwritten without being read.
pub fn gemm<T: Scalar>(alpha: T, a: MatRef<'_, T>, b: MatRef<'_, T>, beta: T, c: &mut [T]) {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert_eq!(b.rows, k, "gemm: inner dimensions {k} and {}", b.rows);
    assert!(c.len() >= m * n, "gemm: output holds {} values, needs {}", c.len(), m * n);
    assert!(a.in_bounds() && b.in_bounds());
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for v in &mut c[..m * n] {
            *v = if beta == T::zero() { T::zero() } else { *v * beta };
        }
        return;
    }
    // SAFETY: shapes and strides were checked against each slice above, and
    // `c` is a distinct mutable borrow so it cannot alias `a` or `b`.
    unsafe {
        T::gemm_strided(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `dst[j] += Σ_i src[i * cols + j]`
pub fn add_column_sums<T: Scalar>(src: &[T], cols: usize, dst: &mut [T]) {
    debug_assert_eq!(dst.len(), cols);
    for row in src.chunks_exact(cols.max(1)) {
        for (d, &v) in dst.iter_mut().zip(row) {
            *d += v;
        }
    }
}
