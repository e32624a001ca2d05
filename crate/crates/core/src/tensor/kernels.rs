//! Slab-wise GEMM kernels over first-mode-fastest tensor storage.
//!
//! For mode `n` a tensor with dims `I_1..I_N` is viewed as `right` slabs,
//! each a column-major `left x mid` matrix, where `left = prod_{k<n} I_k`,
//! `mid = I_n` and `right = prod_{k>n} I_k`. Column `j` of the mode-`n`
//! unfolding is `l + left * r` for slab `r` and slab row `l`, so every
//! unfolding product reduces to one GEMM per slab and no unfolding is ever
//! materialized.

use nalgebra::DMatrix;

/// Strided read-only matrix view over a slice.
#[derive(Clone, Copy)]
pub(crate) struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    rs: isize,
    cs: isize,
}

impl<'a> MatRef<'a> {
    /// Column-major `rows x cols` view with leading dimension `ld`.
    pub(crate) fn col_major(data: &'a [f64], rows: usize, cols: usize, ld: usize) -> Self {
        debug_assert!(rows == 0 || cols == 0 || (cols - 1) * ld + rows <= data.len());
        Self { data, rows, cols, rs: 1, cs: ld as isize }
    }

    pub(crate) fn of(m: &'a DMatrix<f64>) -> Self {
        Self::col_major(m.as_slice(), m.nrows(), m.ncols(), m.nrows())
    }

    pub(crate) fn t(self) -> Self {
        Self { data: self.data, rows: self.cols, cols: self.rows, rs: self.cs, cs: self.rs }
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    pub(crate) fn cols(&self) -> usize {
        self.cols
    }

    /// Rows `start..start+len` of this view.
    pub(crate) fn row_block(self, start: usize, len: usize) -> Self {
        debug_assert!(start + len <= self.rows);
        let offset = (start as isize * self.rs) as usize;
        Self { data: &self.data[offset..], rows: len, ..self }
    }
}

/// `c = alpha * a * b + beta * c`, with `c` column-major `a.rows x b.cols`
/// with leading dimension `ldc`.
pub(crate) fn gemm(alpha: f64, a: MatRef<'_>, b: MatRef<'_>, beta: f64, c: &mut [f64], ldc: usize) {
    assert_eq!(a.cols, b.rows, "gemm inner dimension");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    assert!((n - 1) * ldc + m <= c.len(), "gemm output too small");
    if k == 0 {
        for j in 0..n {
            for v in &mut c[j * ldc..j * ldc + m] {
                *v *= beta;
            }
        }
        return;
    }
    // SAFETY: the asserts above and the MatRef constructors guarantee that
    // every strided access of a, b and c stays inside its slice.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.rs,
            a.cs,
            b.data.as_ptr(),
            b.rs,
            b.cs,
            beta,
            c.as_mut_ptr(),
            1,
            ldc as isize,
        );
    }
}

pub(crate) fn matmul(a: MatRef<'_>, b: MatRef<'_>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.rows, b.cols);
    let ld = a.rows;
    gemm(1.0, a, b, 0.0, out.as_mut_slice(), ld);
    out
}

/// (left, mid, right) split of `dims` around mode `n`.
pub(crate) fn split(dims: &[usize], n: usize) -> (usize, usize, usize) {
    let left = dims[..n].iter().product();
    let right = dims[n + 1..].iter().product();
    (left, dims[n], right)
}

/// `t x_n op(B)` where `op(B)` is `B` (`J x I_n`) or, with `transpose`,
/// `B^T` for `B` of size `I_n x J`. Returns the new data; mode `n` has size `J`.
pub(crate) fn mode_product(dims: &[usize], data: &[f64], b: &DMatrix<f64>, transpose: bool, n: usize) -> Vec<f64> {
    let (left, mid, right) = split(dims, n);
    let op = if transpose { MatRef::of(b).t() } else { MatRef::of(b) };
    debug_assert_eq!(op.cols(), mid);
    let j = op.rows();
    let mut out = vec![0.0; left * j * right];
    if left == 1 {
        let x = MatRef::col_major(data, mid, right, mid);
        gemm(1.0, op, x, 0.0, &mut out, j);
    } else {
        for r in 0..right {
            let slab = MatRef::col_major(&data[r * left * mid..(r + 1) * left * mid], left, mid, left);
            gemm(1.0, slab, op.t(), 0.0, &mut out[r * left * j..(r + 1) * left * j], left);
        }
    }
    out
}

/// `X_(n) * m` for `m` of size `(prod_{k!=n} I_k) x k`.
pub(crate) fn unfold_mul(dims: &[usize], data: &[f64], m: MatRef<'_>, n: usize) -> DMatrix<f64> {
    let (left, mid, right) = split(dims, n);
    debug_assert_eq!(m.rows(), left * right);
    let k = m.cols();
    let mut out = DMatrix::zeros(mid, k);
    if left == 1 {
        let x = MatRef::col_major(data, mid, right, mid);
        gemm(1.0, x, m, 0.0, out.as_mut_slice(), mid);
    } else {
        for r in 0..right {
            let slab = MatRef::col_major(&data[r * left * mid..(r + 1) * left * mid], left, mid, left);
            gemm(1.0, slab.t(), m.row_block(r * left, left), 1.0, out.as_mut_slice(), mid);
        }
    }
    out
}

/// `X_(n)^T * m` for `m` of size `I_n x k`.
pub(crate) fn unfold_t_mul(dims: &[usize], data: &[f64], m: MatRef<'_>, n: usize) -> DMatrix<f64> {
    let (left, mid, right) = split(dims, n);
    debug_assert_eq!(m.rows(), mid);
    let k = m.cols();
    let rows = left * right;
    let mut out = DMatrix::zeros(rows, k);
    if left == 1 {
        let x = MatRef::col_major(data, mid, right, mid);
        gemm(1.0, x.t(), m, 0.0, out.as_mut_slice(), rows);
    } else {
        let buf = out.as_mut_slice();
        for r in 0..right {
            let slab = MatRef::col_major(&data[r * left * mid..(r + 1) * left * mid], left, mid, left);
            gemm(1.0, slab, m, 0.0, &mut buf[r * left..], rows);
        }
    }
    out
}

/// Gram matrix `X_(n) X_(n)^T`.
pub(crate) fn gram(dims: &[usize], data: &[f64], n: usize) -> DMatrix<f64> {
    let (left, mid, right) = split(dims, n);
    let mut g = DMatrix::zeros(mid, mid);
    if left == 1 {
        let x = MatRef::col_major(data, mid, right, mid);
        gemm(1.0, x, x.t(), 0.0, g.as_mut_slice(), mid);
    } else {
        for r in 0..right {
            let slab = MatRef::col_major(&data[r * left * mid..(r + 1) * left * mid], left, mid, left);
            gemm(1.0, slab.t(), slab, 1.0, g.as_mut_slice(), mid);
        }
    }
    // Symmetrize away rounding asymmetry.
    for i in 0..mid {
        for j in 0..i {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}
