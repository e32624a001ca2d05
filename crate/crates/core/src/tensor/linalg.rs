//! Dense matrix helpers shared by the decompositions.

use nalgebra::{DMatrix, SymmetricEigen, SVD};

use super::kernels::{self, MatRef};
use crate::error::{mismatch, Result};

/// `a * b` through the blocked GEMM kernel.
pub fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows(), "matmul inner dimension");
    kernels::matmul(MatRef::of(a), MatRef::of(b))
}

/// `a^T * b` through the blocked GEMM kernel.
pub fn matmul_tn(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows(), "matmul_tn inner dimension");
    kernels::matmul(MatRef::of(a).t(), MatRef::of(b))
}

/// `a * b^T` through the blocked GEMM kernel.
pub fn matmul_nt(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.ncols(), "matmul_nt inner dimension");
    kernels::matmul(MatRef::of(a), MatRef::of(b).t())
}

/// Orthonormal basis for the column space of `m` (thin Householder QR).
///
/// When `m` has more columns than rows only the first `rows` columns of Q
/// exist, so the result has `min(rows, cols)` columns.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows().min(m.ncols());
    if m.ncols() > m.nrows() {
        return m.clone().qr().q().columns(0, k).into_owned();
    }
    m.clone().qr().q()
}

/// Thin QR factors `(Q, R)` with `m = Q R`.
pub fn thin_qr(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Leading `r` left singular vectors from a full SVD.
pub fn svd_left(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("requested U");
    let order = sorted_order(svd.singular_values.as_slice());
    select_columns(&u, &order[..r.min(order.len())])
}

/// Truncated SVD `(U_r, s_r, V_r)` of `m`.
pub fn svd_truncated(m: &DMatrix<f64>, r: usize) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").transpose();
    let order = sorted_order(svd.singular_values.as_slice());
    let keep = &order[..r.min(order.len())];
    let s = keep.iter().map(|&i| svd.singular_values[i]).collect();
    (select_columns(&u, keep), s, select_columns(&v, keep))
}

/// Leading `r` eigenvectors of a symmetric matrix, by decreasing eigenvalue.
pub fn sym_eig_leading(g: &DMatrix<f64>, r: usize) -> (DMatrix<f64>, Vec<f64>) {
    let eig = SymmetricEigen::new(g.clone());
    let order = sorted_order(eig.eigenvalues.as_slice());
    let keep = &order[..r.min(order.len())];
    let vals = keep.iter().map(|&i| eig.eigenvalues[i]).collect();
    (select_columns(&eig.eigenvectors, keep), vals)
}

/// Leading `r` left singular vectors of `m`, through the Gram matrix when
/// `m` is much wider than tall and through the SVD otherwise.
pub fn leading_left_singular(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    if m.ncols() > 4 * m.nrows() {
        sym_eig_leading(&matmul_nt(m, m), r).0
    } else {
        svd_left(m, r)
    }
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Columns of `m` picked by `idx`, in that order.
pub fn select_columns(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), idx.len());
    for (j, &c) in idx.iter().enumerate() {
        out.column_mut(j).copy_from(&m.column(c));
    }
    out
}

/// Rows of `m` picked by `idx`, in that order.
pub fn select_rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

/// Moore-Penrose pseudoinverse. Singular values at or below
/// `max(rows, cols) * eps * sigma_max` are treated as zero.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for k in 0..s.len() {
        if s[k] > tol {
            out += (vt.row(k).transpose() / s[k]) * u.column(k).transpose();
        }
    }
    out
}

/// Numerical rank with the same threshold as [`pinv`].
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    s.iter().filter(|&&v| v > tol).count()
}

/// `min sigma / max sigma`, zero for a rank-deficient or empty matrix.
pub fn inverse_condition(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 && s.len() == m.nrows().min(m.ncols()) => lo / hi,
        _ => 0.0,
    }
}

/// Kronecker product `a (x) b`; row `ia * b.rows + ib`.
pub fn kronecker(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Kronecker product of `mats` in the given order, `mats[0]` slowest.
pub fn kronecker_all(mats: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for m in mats {
        out = out.kronecker(*m);
    }
    out
}

/// Column-wise Kronecker (Khatri-Rao) product, `b` varies fastest.
pub fn khatri_rao(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(mismatch(format!(
            "Khatri-Rao needs equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ra, rb) = (a.nrows(), b.nrows());
    Ok(DMatrix::from_fn(ra * rb, a.ncols(), |i, j| a[(i / rb, j)] * b[(i % rb, j)]))
}

/// Largest absolute entry of `q^T q - I`.
pub fn orthonormality_error(q: &DMatrix<f64>) -> f64 {
    let g = matmul_tn(q, q);
    let mut err: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)] - target).abs());
        }
    }
    err
}

pub fn is_orthonormal(q: &DMatrix<f64>, tol: f64) -> bool {
    orthonormality_error(q) <= tol
}

/// Householder QR with column pivoting by largest remaining column norm:
/// `a[:, perm] = q * r`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// `rows x k` with orthonormal columns, `k = min(rows, cols)`.
    pub q: DMatrix<f64>,
    /// `k x cols`, upper trapezoidal.
    pub r: DMatrix<f64>,
    /// Column permutation: column `j` of `q * r` is column `perm[j]` of `a`.
    pub perm: Vec<usize>,
}

pub fn pivoted_qr(a: &DMatrix<f64>) -> PivotedQr {
    let (m, n) = (a.nrows(), a.ncols());
    let k = m.min(n);
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = (0..n).map(|j| w.column(j).norm_squared()).collect();
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k);

    for step in 0..k {
        // Recompute the trailing norms exactly; downdating loses accuracy
        // and these matrices are small.
        for j in step..n {
            norms[j] = w.view((step, j), (m - step, 1)).norm_squared();
        }
        let mut best = step;
        for j in step + 1..n {
            if norms[j] > norms[best] {
                best = j;
            }
        }
        if best != step {
            w.swap_columns(step, best);
            perm.swap(step, best);
            norms.swap(step, best);
        }

        let x: Vec<f64> = (step..m).map(|i| w[(i, step)]).collect();
        let alpha = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if alpha == 0.0 {
            reflectors.push((vec![0.0; m - step], 0.0));
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x;
        v[0] += sign * alpha;
        let vnorm_sq: f64 = v.iter().map(|t| t * t).sum();
        let tau = 2.0 / vnorm_sq;
        for j in step..n {
            let dot: f64 = (step..m).map(|i| v[i - step] * w[(i, j)]).sum();
            let f = tau * dot;
            for i in step..m {
                w[(i, j)] -= f * v[i - step];
            }
        }
        for i in step + 1..m {
            w[(i, step)] = 0.0;
        }
        reflectors.push((v, tau));
    }

    let r = DMatrix::from_fn(k, n, |i, j| if i <= j { w[(i, j)] } else { 0.0 });
    let mut q = DMatrix::identity(m, k);
    for (step, (v, tau)) in reflectors.iter().enumerate().rev() {
        if *tau == 0.0 {
            continue;
        }
        for j in 0..k {
            let dot: f64 = (step..m).map(|i| v[i - step] * q[(i, j)]).sum();
            let f = tau * dot;
            for i in step..m {
                q[(i, j)] -= f * v[i - step];
            }
        }
    }
    PivotedQr { q, r, perm }
}
