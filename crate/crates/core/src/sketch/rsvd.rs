use nalgebra::DMatrix;

use super::config::{SketchConfig, SvdFactors};
use super::operator::LinearOperator;
use crate::error::{Result, TuckerError};
use crate::rng::{Distribution, RandomStream};
use crate::tensor::linalg;

/// Orthonormal basis of `X Omega` with `k` random columns, sharpened by
/// `q` power iterations.
///
/// Each power iteration re-orthonormalizes the sketch and multiplies by
/// `X X^T` one factor at a time, so `(X X^T)^q X` is never formed.
pub fn range_finder<X: LinearOperator + ?Sized>(
    x: &X,
    k: usize,
    q: usize,
    dist: Distribution,
    rng: &mut RandomStream,
) -> DMatrix<f64> {
    let omega = rng.matrix(x.ncols(), k, dist);
    let mut y = x.mul(&omega);
    for _ in 0..q {
        let basis = linalg::orthonormalize(&y);
        y = x.mul(&x.mul_t(&basis));
    }
    linalg::orthonormalize(&y)
}

/// Basic randomized SVD with oversampling and power iteration.
///
/// An all-zero input yields zero singular values.
pub fn rsvd_basic<X: LinearOperator + ?Sized>(x: &X, cfg: &SketchConfig) -> Result<SvdFactors> {
    cfg.check(x.nrows(), x.ncols())?;
    let mut rng = RandomStream::new(cfg.seed);
    let q = range_finder(x, cfg.sketch_size(), cfg.power_iterations, cfg.distribution, &mut rng);
    // B = Q^T X, formed as (X^T Q)^T.
    let b = x.mul_t(&q).transpose();
    let (ub, s, v) = linalg::svd_truncated(&b, cfg.rank);
    Ok(SvdFactors { u: linalg::matmul(&q, &ub), s, v })
}

/// Two-sided randomized SVD: sketch both the range and the co-range, then
/// take the SVD of the small `Q1^T X Q2`.
pub fn rsvd_two_sided<X: LinearOperator + ?Sized>(x: &X, cfg: &SketchConfig) -> Result<SvdFactors> {
    if cfg.rank == 0 {
        return Err(TuckerError::InvalidParameter("target rank must be positive".into()));
    }
    let limit = x.nrows().min(x.ncols());
    if cfg.rank > limit {
        return Err(TuckerError::RankTooLarge { rank: cfg.rank, dim: limit });
    }
    let k = cfg.sketch_size().min(limit);
    let root = RandomStream::new(cfg.seed);
    let q1 = range_finder(x, k, cfg.power_iterations, cfg.distribution, &mut root.substream(1));
    let q2 = range_finder(&Transposed(x), k, cfg.power_iterations, cfg.distribution, &mut root.substream(2));
    let b = linalg::matmul_tn(&q1, &x.mul(&q2));
    let (ub, s, vb) = linalg::svd_truncated(&b, cfg.rank);
    Ok(SvdFactors { u: linalg::matmul(&q1, &ub), s, v: linalg::matmul(&q2, &vb) })
}

struct Transposed<'a, X: ?Sized>(&'a X);

impl<X: LinearOperator + ?Sized> LinearOperator for Transposed<'_, X> {
    fn nrows(&self) -> usize {
        self.0.ncols()
    }

    fn ncols(&self) -> usize {
        self.0.nrows()
    }

    fn mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.mul_t(m)
    }

    fn mul_t(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.mul(m)
    }
}

/// Expected-error bound of the basic randomized SVD for an `rows x cols`
/// matrix whose `(R+1)`-th singular value is `sigma_next`:
///
/// `(1 + sqrt(R/(p-1)) + e sqrt(R+p)/p * sqrt(min(rows,cols) - R))^(1/(2q+1)) * sigma_next`.
pub fn rsvd_error_bound(rows: usize, cols: usize, rank: usize, p: usize, q: usize, sigma_next: f64) -> Result<f64> {
    if p < 2 {
        return Err(TuckerError::InvalidParameter(format!("the bound needs oversampling >= 2, got {p}")));
    }
    let (r, pf) = (rank as f64, p as f64);
    let tail = rows.min(cols).saturating_sub(rank) as f64;
    let factor = 1.0 + (r / (pf - 1.0)).sqrt() + std::f64::consts::E * (r + pf).sqrt() / pf * tail.sqrt();
    Ok(factor.powf(1.0 / (2 * q + 1) as f64) * sigma_next)
}
