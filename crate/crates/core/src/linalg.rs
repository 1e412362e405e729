//! Thin, bounds-checked wrappers over the `matrixmultiply` GEMM kernel.
//!
//! Layer kernels express their heavy contractions as `C = alpha*A*B + beta*C`
//! on strided matrix views of flat `f64` slices. Strides let callers multiply
//! transposed or batch-interleaved operands without materialising copies.

/// Immutable strided matrix view over a slice.
#[derive(Clone, Copy)]
pub struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    row_stride: usize,
    col_stride: usize,
}

impl<'a> MatRef<'a> {
    /// Contiguous row-major view; `data` must hold exactly `rows * cols`.
    pub fn contiguous(data: &'a [f64], rows: usize, cols: usize) -> Self {
        assert_eq!(data.len(), rows * cols, "contiguous view size mismatch");
        MatRef {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    /// Arbitrary positive strides; the view must fit inside `data`.
    pub fn strided(
        data: &'a [f64],
        rows: usize,
        cols: usize,
        row_stride: usize,
        col_stride: usize,
    ) -> Self {
        check_bounds(data.len(), rows, cols, row_stride, col_stride);
        MatRef {
            data,
            rows,
            cols,
            row_stride,
            col_stride,
        }
    }

    /// Transposed view of the same data (no copy).
    pub fn t(self) -> Self {
        MatRef {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }
}

/// Mutable strided matrix view over a slice.
pub struct MatMut<'a> {
    data: &'a mut [f64],
    rows: usize,
    cols: usize,
    row_stride: usize,
    col_stride: usize,
}

impl<'a> MatMut<'a> {
    /// Contiguous row-major mutable view.
    pub fn contiguous(data: &'a mut [f64], rows: usize, cols: usize) -> Self {
        assert_eq!(data.len(), rows * cols, "contiguous view size mismatch");
        MatMut {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    /// Arbitrary positive strides; the view must fit inside `data`.
    pub fn strided(
        data: &'a mut [f64],
        rows: usize,
        cols: usize,
        row_stride: usize,
        col_stride: usize,
    ) -> Self {
        check_bounds(data.len(), rows, cols, row_stride, col_stride);
        MatMut {
            data,
            rows,
            cols,
            row_stride,
            col_stride,
        }
    }
}

fn check_bounds(len: usize, rows: usize, cols: usize, row_stride: usize, col_stride: usize) {
    if rows == 0 || cols == 0 {
        return;
    }
    let max_index = (rows - 1) * row_stride + (cols - 1) * col_stride;
    assert!(
        max_index < len,
        "strided view out of bounds: max index {max_index}, len {len}"
    );
}

/// `c = alpha * a * b + beta * c` for `a: [m×k]`, `b: [k×n]`, `c: [m×n]`.
///
/// Dimension agreement is asserted; views were bounds-checked at creation.
pub fn gemm(alpha: f64, a: MatRef<'_>, b: MatRef<'_>, beta: f64, c: MatMut<'_>) {
    assert_eq!(a.cols, b.rows, "gemm inner dimension mismatch");
    assert_eq!(a.rows, c.rows, "gemm output row mismatch");
    assert_eq!(b.cols, c.cols, "gemm output column mismatch");
    if a.rows == 0 || b.cols == 0 {
        return;
    }
    if a.cols == 0 {
        // Degenerate contraction: GEMM semantics reduce to scaling C.
        scale_view(beta, c);
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            a.rows,
            a.cols,
            b.cols,
            alpha,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.data.as_mut_ptr(),
            c.row_stride as isize,
            c.col_stride as isize,
        );
    }
}

fn scale_view(beta: f64, c: MatMut<'_>) {
    for r in 0..c.rows {
        for col in 0..c.cols {
            let idx = r * c.row_stride + col * c.col_stride;
            c.data[idx] *= beta;
        }
    }
}

/// Convenience: `out[m×n] = a[m×k] * b[k×n]` over contiguous slices.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    gemm(
        1.0,
        MatRef::contiguous(a, m, k),
        MatRef::contiguous(b, k, n),
        0.0,
        MatMut::contiguous(&mut out, m, n),
    );
    out
}
