//! Sketched least squares `min |T A x - T b|` for structured `A`.
//!
//! `A` is only read row by row through [`RowOperator`], so Kronecker and
//! Khatri-Rao products are never formed. `T A` and `T b` are built in the
//! same sweep over the rows.

use nalgebra::DMatrix;

use super::count_sketch::CountSketchOp;
use super::operator::LinearOperator;
use crate::error::{mismatch, Result, TuckerError};
use crate::rng::RandomStream;
use crate::tensor::linalg;

/// A matrix read one row at a time.
pub trait RowOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Write row `i` into `out` (length `ncols`).
    fn row_into(&self, i: usize, out: &mut [f64]);

    /// Visit all rows in order.
    fn for_each_row(&self, f: &mut dyn FnMut(usize, &[f64])) {
        let mut buf = vec![0.0; self.ncols()];
        for i in 0..self.nrows() {
            self.row_into(i, &mut buf);
            f(i, &buf);
        }
    }

    /// Count-sketch suited to this operator's row structure.
    fn count_sketch(&self, rows: usize, seed: u64) -> Result<CountSketchOp> {
        CountSketchOp::new(self.nrows(), rows, seed)
    }
}

/// A dense matrix as a row operator.
pub struct DenseRows<'a>(pub &'a DMatrix<f64>);

impl RowOperator for DenseRows<'_> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    fn row_into(&self, i: usize, out: &mut [f64]) {
        for (j, v) in out.iter_mut().enumerate() {
            *v = self.0[(i, j)];
        }
    }
}

/// `mats[0] (x) mats[1] (x) ..`, the last factor varying fastest.
pub struct KroneckerRows<'a> {
    mats: Vec<&'a DMatrix<f64>>,
    /// Row-major copies of `mats`.
    row_major: Vec<Vec<f64>>,
}

impl<'a> KroneckerRows<'a> {
    pub fn new(mats: Vec<&'a DMatrix<f64>>) -> Result<Self> {
        if mats.is_empty() {
            return Err(TuckerError::InvalidParameter("Kronecker product of no matrices".into()));
        }
        let row_major = mats.iter().map(|m| m.transpose().as_slice().to_vec()).collect();
        Ok(Self { mats, row_major })
    }

    fn visit(&self, level: usize, row: usize, prefix: &[f64], f: &mut dyn FnMut(usize, &[f64])) {
        let m = self.mats[level];
        let c = m.ncols();
        let mut next = vec![0.0; prefix.len() * c];
        for (i, m_row) in self.row_major[level].chunks_exact(c).enumerate() {
            for (chunk, &p) in next.chunks_exact_mut(c).zip(prefix) {
                for (out, &v) in chunk.iter_mut().zip(m_row) {
                    *out = p * v;
                }
            }
            let r = row * m.nrows() + i;
            if level + 1 == self.mats.len() {
                f(r, &next);
            } else {
                self.visit(level + 1, r, &next, f);
            }
        }
    }
}

impl RowOperator for KroneckerRows<'_> {
    fn nrows(&self) -> usize {
        self.mats.iter().map(|m| m.nrows()).product()
    }

    fn ncols(&self) -> usize {
        self.mats.iter().map(|m| m.ncols()).product()
    }

    fn row_into(&self, mut i: usize, out: &mut [f64]) {
        let mut idx = vec![0; self.mats.len()];
        for (k, m) in self.mats.iter().enumerate().rev() {
            idx[k] = i % m.nrows();
            i /= m.nrows();
        }
        out[0] = 1.0;
        let mut len = 1;
        for (k, m) in self.mats.iter().enumerate() {
            let c = m.ncols();
            for a in (0..len).rev() {
                let p = out[a];
                for j in 0..c {
                    out[a * c + j] = p * m[(idx[k], j)];
                }
            }
            len *= c;
        }
    }

    fn for_each_row(&self, f: &mut dyn FnMut(usize, &[f64])) {
        self.visit(0, 0, &[1.0], f);
    }

    fn count_sketch(&self, rows: usize, seed: u64) -> Result<CountSketchOp> {
        let dims: Vec<usize> = self.mats.iter().rev().map(|m| m.nrows()).collect();
        CountSketchOp::tensor(&dims, rows, seed)
    }
}

/// Khatri-Rao product `mats[0] (.) mats[1] (.) ..`, the last factor varying
/// fastest.
pub struct KhatriRaoRows<'a> {
    mats: Vec<&'a DMatrix<f64>>,
}

impl<'a> KhatriRaoRows<'a> {
    pub fn new(mats: Vec<&'a DMatrix<f64>>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(TuckerError::InvalidParameter("Khatri-Rao product of no matrices".into()));
        };
        if mats.iter().any(|m| m.ncols() != first.ncols()) {
            return Err(mismatch("Khatri-Rao factors need equal column counts"));
        }
        Ok(Self { mats })
    }
}

impl RowOperator for KhatriRaoRows<'_> {
    fn nrows(&self) -> usize {
        self.mats.iter().map(|m| m.nrows()).product()
    }

    fn ncols(&self) -> usize {
        self.mats[0].ncols()
    }

    fn row_into(&self, mut i: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 1.0);
        for m in self.mats.iter().rev() {
            let r = i % m.nrows();
            i /= m.nrows();
            for (j, v) in out.iter_mut().enumerate() {
                *v *= m[(r, j)];
            }
        }
    }

    fn count_sketch(&self, rows: usize, seed: u64) -> Result<CountSketchOp> {
        let dims: Vec<usize> = self.mats.iter().rev().map(|m| m.nrows()).collect();
        CountSketchOp::tensor(&dims, rows, seed)
    }
}

/// Sketching operator `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LsqSketch {
    /// Dense Gaussian `T` with `N(0, 1/L)` entries.
    Gaussian,
    #[default]
    CountSketch,
    /// Uniform row sampling without replacement.
    RowSample,
    /// `T = I`: the unsketched problem.
    Full,
}

/// Sketch kind, sketch rows `L` and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct LsqConfig {
    pub sketch: LsqSketch,
    pub rows: usize,
    pub seed: u64,
}

impl LsqConfig {
    /// Default count-sketch size multiplier on the number of unknowns.
    pub const DEFAULT_MULTIPLIER: usize = 20;

    pub fn new(sketch: LsqSketch, rows: usize, seed: u64) -> Self {
        Self { sketch, rows, seed }
    }

    /// Count-sketch with `L = 20 * cols`.
    pub fn count_sketch_for(cols: usize, seed: u64) -> Self {
        Self::new(LsqSketch::CountSketch, Self::DEFAULT_MULTIPLIER * cols, seed)
    }
}

/// `(T A, T b)` for the configured sketch.
pub fn sketch_system<A: RowOperator + ?Sized>(
    a: &A,
    b: &DMatrix<f64>,
    cfg: &LsqConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (m, n, k) = (a.nrows(), a.ncols(), b.ncols());
    if b.nrows() != m {
        return Err(mismatch(format!("operator has {m} rows, right-hand side has {}", b.nrows())));
    }
    let l = if cfg.sketch == LsqSketch::Full { m } else { cfg.rows };
    if l < n {
        return Err(TuckerError::InvalidParameter(format!("sketch has {l} rows, fewer than the {n} unknowns")));
    }
    match cfg.sketch {
        LsqSketch::Full => {
            let mut ta = DMatrix::zeros(m, n);
            a.for_each_row(&mut |i, row| {
                for (j, &v) in row.iter().enumerate() {
                    ta[(i, j)] = v;
                }
            });
            Ok((ta, b.clone()))
        }
        LsqSketch::CountSketch => {
            let op = a.count_sketch(l, cfg.seed)?;
            let mut ta = DMatrix::zeros(l, n);
            a.for_each_row(&mut |i, row| {
                let (h, s) = (op.bucket(i), op.sign(i));
                for (j, &v) in row.iter().enumerate() {
                    ta[(h, j)] += s * v;
                }
            });
            let tb = op.apply(b, super::count_sketch::Side::Rows)?;
            Ok((ta, tb))
        }
        LsqSketch::RowSample => {
            if l > m {
                return Err(TuckerError::InvalidParameter(format!("cannot sample {l} of {m} rows")));
            }
            let mut rng = RandomStream::new(cfg.seed);
            let mut perm: Vec<usize> = (0..m).collect();
            for t in 0..l {
                let j = t + rng.below(m - t);
                perm.swap(t, j);
            }
            let scale = (m as f64 / l as f64).sqrt();
            let mut ta = DMatrix::zeros(l, n);
            let mut tb = DMatrix::zeros(l, k);
            let mut buf = vec![0.0; n];
            for (t, &i) in perm[..l].iter().enumerate() {
                a.row_into(i, &mut buf);
                for j in 0..n {
                    ta[(t, j)] = scale * buf[j];
                }
                for j in 0..k {
                    tb[(t, j)] = scale * b[(i, j)];
                }
            }
            Ok((ta, tb))
        }
        LsqSketch::Gaussian => {
            const BLOCK: usize = 256;
            let mut rng = RandomStream::new(cfg.seed);
            let scale = 1.0 / (l as f64).sqrt();
            let mut ta = DMatrix::zeros(l, n);
            let mut tb = DMatrix::zeros(l, k);
            let mut block = DMatrix::zeros(BLOCK, n);
            let mut filled = 0;
            let mut start = 0;
            let mut flush = |block: &DMatrix<f64>, start: usize, rows: usize, ta: &mut DMatrix<f64>, tb: &mut DMatrix<f64>| {
                let t = rng.gaussian_matrix(l, rows) * scale;
                *ta += &t * block.rows(0, rows);
                *tb += &t * b.rows(start, rows);
            };
            a.for_each_row(&mut |_, row| {
                for (j, &v) in row.iter().enumerate() {
                    block[(filled, j)] = v;
                }
                filled += 1;
                if filled == BLOCK {
                    flush(&block, start, filled, &mut ta, &mut tb);
                    start += filled;
                    filled = 0;
                }
            });
            if filled > 0 {
                flush(&block, start, filled, &mut ta, &mut tb);
            }
            Ok((ta, tb))
        }
    }
}

/// `T A` for a count-sketch `T`, streaming the rows of `A`.
pub fn count_sketch_rows<A: RowOperator + ?Sized>(a: &A, op: &CountSketchOp) -> Result<DMatrix<f64>> {
    if op.input_dim() != a.nrows() {
        return Err(mismatch(format!("sketch expects {} rows, operator has {}", op.input_dim(), a.nrows())));
    }
    // Rows are accumulated contiguously (row-major) to keep the scatter
    // cache friendly, then transposed into column-major storage.
    let c = a.ncols();
    let mut rows = vec![0.0; op.sketch_dim() * c];
    a.for_each_row(&mut |i, row| {
        let (h, s) = (op.bucket(i), op.sign(i));
        for (acc, &v) in rows[h * c..(h + 1) * c].iter_mut().zip(row) {
            *acc += s * v;
        }
    });
    Ok(DMatrix::from_row_slice(op.sketch_dim(), c, &rows))
}

/// Conjugate gradients on the normal equations of `min |A x - b|`, started
/// from `x0`. Stops when `|A^T r| <= tol * |A^T b|`, when the normal
/// residual stops shrinking (rounding floor), or after `max_iters`.
pub fn cgls<A: LinearOperator + ?Sized>(
    a: &A,
    b: &DMatrix<f64>,
    x0: &DMatrix<f64>,
    tol: f64,
    max_iters: usize,
) -> DMatrix<f64> {
    let mut x = x0.clone();
    let mut r = b - a.mul(&x);
    let mut s = a.mul_t(&r);
    let target = tol * a.mul_t(b).norm();
    let mut p = s.clone();
    let mut gamma = s.norm_squared();
    let mut best = (gamma, x.clone());
    for _ in 0..max_iters {
        if gamma.sqrt() <= target || gamma == 0.0 {
            break;
        }
        let q = a.mul(&p);
        let qq = q.norm_squared();
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        x += &p * alpha;
        r -= &q * alpha;
        s = a.mul_t(&r);
        let next = s.norm_squared();
        if next < best.0 {
            best = (next, x.clone());
        } else if next > 1e4 * best.0 {
            // Lost conjugacy after reaching the rounding floor.
            break;
        }
        p = &s + &p * (next / gamma);
        gamma = next;
    }
    best.1
}

/// Minimum-norm least-squares solution of `a x = b`.
///
/// Small systems go through the pseudoinverse. Systems with many unknowns
/// use the normal equations with a Cholesky solve, falling back to the
/// pseudoinverse of the Gram matrix when it is not positive definite.
pub fn solve_least_squares(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    const DIRECT_LIMIT: usize = 256;
    if a.ncols() <= DIRECT_LIMIT {
        return linalg::matmul(&linalg::pinv(a), b);
    }
    let g = linalg::matmul_tn(a, a);
    let rhs = linalg::matmul_tn(a, b);
    match g.clone().cholesky() {
        Some(ch) if diagonal_ratio(ch.l_dirty()) > 1e-6 => ch.solve(&rhs),
        _ => linalg::matmul(&linalg::pinv(&g), &rhs),
    }
}

/// `min l_ii / max l_ii` of a Cholesky factor, a cheap proxy for the
/// square root of the inverse condition number.
fn diagonal_ratio(l: &DMatrix<f64>) -> f64 {
    let d = l.diagonal();
    let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v.abs()), hi.max(v.abs())));
    if hi > 0.0 {
        lo / hi
    } else {
        0.0
    }
}

/// `argmin_x |T A x - T b|` column by column of `b`.
pub fn sketched_lsq<A: RowOperator + ?Sized>(a: &A, b: &DMatrix<f64>, cfg: &LsqConfig) -> Result<DMatrix<f64>> {
    let (ta, tb) = sketch_system(a, b, cfg)?;
    Ok(solve_least_squares(&ta, &tb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_rows_match_explicit() {
        let mut rng = RandomStream::new(1);
        let (a, b, c) = (rng.gaussian_matrix(3, 2), rng.gaussian_matrix(2, 3), rng.gaussian_matrix(4, 1));
        let op = KroneckerRows::new(vec![&a, &b, &c]).unwrap();
        let k = linalg::kronecker_all(&[&a, &b, &c]);
        assert_eq!((op.nrows(), op.ncols()), k.shape());
        let mut buf = vec![0.0; op.ncols()];
        let mut seen = 0;
        op.for_each_row(&mut |i, row| {
            op.row_into(i, &mut buf);
            for j in 0..row.len() {
                assert!((row[j] - k[(i, j)]).abs() < 1e-14);
                assert!((buf[j] - k[(i, j)]).abs() < 1e-14);
            }
            seen += 1;
        });
        assert_eq!(seen, k.nrows());
    }

    #[test]
    fn khatri_rao_rows_match_explicit() {
        let mut rng = RandomStream::new(2);
        let (a, b) = (rng.gaussian_matrix(3, 2), rng.gaussian_matrix(4, 2));
        let op = KhatriRaoRows::new(vec![&a, &b]).unwrap();
        let kr = linalg::khatri_rao(&a, &b).unwrap();
        let mut buf = vec![0.0; 2];
        for i in 0..12 {
            op.row_into(i, &mut buf);
            assert!((buf[0] - kr[(i, 0)]).abs() < 1e-14 && (buf[1] - kr[(i, 1)]).abs() < 1e-14);
        }
    }

    #[test]
    fn consistent_system_is_solved_exactly() {
        let mut rng = RandomStream::new(3);
        let a = rng.gaussian_matrix(40, 5);
        let x = rng.gaussian_matrix(5, 2);
        let b = &a * &x;
        for sketch in [LsqSketch::Full, LsqSketch::CountSketch, LsqSketch::Gaussian, LsqSketch::RowSample] {
            let got = sketched_lsq(&DenseRows(&a), &b, &LsqConfig::new(sketch, 40, 7)).unwrap();
            assert!((&a * got - &b).norm() <= 1e-10 * b.norm(), "{sketch:?}");
        }
    }

    #[test]
    fn orthonormal_kronecker_closed_form() {
        let mut rng = RandomStream::new(4);
        let q1 = linalg::orthonormalize(&rng.gaussian_matrix(6, 2));
        let q2 = linalg::orthonormalize(&rng.gaussian_matrix(5, 3));
        let b = rng.gaussian_matrix(30, 1);
        let op = KroneckerRows::new(vec![&q2, &q1]).unwrap();
        let x = sketched_lsq(&op, &b, &LsqConfig::new(LsqSketch::Full, 0, 0)).unwrap();
        let k = linalg::kronecker(&q2, &q1);
        assert!((x - k.transpose() * &b).norm() < 1e-8);
    }

    #[test]
    fn cgls_matches_direct_solve() {
        let mut rng = RandomStream::new(6);
        let a = rng.gaussian_matrix(60, 8);
        let b = rng.gaussian_matrix(60, 1);
        let direct = solve_least_squares(&a, &b);
        let iter = cgls(&a, &b, &DMatrix::zeros(8, 1), 1e-14, 100);
        assert!((direct - iter).norm() < 1e-10);
    }

    #[test]
    fn count_sketch_rows_matches_explicit() {
        let mut rng = RandomStream::new(7);
        let (p, q) = (rng.gaussian_matrix(4, 2), rng.gaussian_matrix(3, 2));
        let op = KroneckerRows::new(vec![&p, &q]).unwrap();
        let cs = op.count_sketch(5, 1).unwrap();
        let explicit = cs.to_matrix() * linalg::kronecker(&p, &q);
        assert!((count_sketch_rows(&op, &cs).unwrap() - explicit).norm() < 1e-12);
    }

    #[test]
    fn too_few_sketch_rows() {
        let a = DMatrix::<f64>::zeros(10, 4);
        let b = DMatrix::<f64>::zeros(10, 1);
        assert!(sketched_lsq(&DenseRows(&a), &b, &LsqConfig::new(LsqSketch::CountSketch, 3, 0)).is_err());
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let b = DMatrix::from_column_slice(3, 1, &[2.0, 2.0, 2.0]);
        let x = sketched_lsq(&DenseRows(&a), &b, &LsqConfig::new(LsqSketch::Full, 0, 0)).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
