use nalgebra::DMatrix;

use super::config::LeadingVectors;
use crate::rng::{Distribution, RandomStream};
use crate::sketch::{range_finder, LinearOperator};
use crate::tensor::{linalg, DenseTensor, ModeOp};

/// Leading `r` left singular vectors of the mode-`n` unfolding of `t`.
pub(crate) fn leading_vectors(t: &DenseTensor, n: usize, r: usize, method: LeadingVectors) -> DMatrix<f64> {
    let rows = t.dims()[n];
    let cols = t.shape().len_without(n);
    let use_gram = match method {
        LeadingVectors::Auto => cols > 4 * rows,
        LeadingVectors::Gram => true,
        LeadingVectors::Svd => false,
    };
    if use_gram {
        linalg::sym_eig_leading(&t.gram(n).expect("mode in range"), r).0
    } else {
        linalg::svd_left(&t.unfold(n).expect("mode in range"), r)
    }
}

/// `t x_{n in modes} Q^(n)^T`, applying the most shrinking modes first.
pub(crate) fn project(t: &DenseTensor, factors: &[DMatrix<f64>], modes: &[usize]) -> DenseTensor {
    let mut order = modes.to_vec();
    order.sort_by(|&a, &b| {
        let ra = factors[a].ncols() as f64 / factors[a].nrows() as f64;
        let rb = factors[b].ncols() as f64 / factors[b].nrows() as f64;
        ra.total_cmp(&rb)
    });
    let ops: Vec<ModeOp<'_>> = order.iter().map(|&n| ModeOp::transposed(n, &factors[n])).collect();
    t.multi_mode_product(&ops).expect("conforming factors")
}

/// `t x_1 Q^(1)^T .. x_N Q^(N)^T`.
pub(crate) fn project_all(t: &DenseTensor, factors: &[DMatrix<f64>]) -> DenseTensor {
    let modes: Vec<usize> = (0..t.order()).collect();
    project(t, factors, &modes)
}

/// `t x_{p != skip} Q^(p)^T`.
pub(crate) fn project_except(t: &DenseTensor, factors: &[DMatrix<f64>], skip: usize) -> DenseTensor {
    let modes: Vec<usize> = (0..t.order()).filter(|&p| p != skip).collect();
    project(t, factors, &modes)
}

/// `t x_1 Q^(1)^+ .. x_N Q^(N)^+`.
pub(crate) fn pinv_core(t: &DenseTensor, factors: &[DMatrix<f64>]) -> DenseTensor {
    let pinvs: Vec<DMatrix<f64>> = factors.iter().map(linalg::pinv).collect();
    let mut order: Vec<usize> = (0..t.order()).collect();
    order.sort_by(|&a, &b| {
        let ra = pinvs[a].nrows() as f64 / pinvs[a].ncols() as f64;
        let rb = pinvs[b].nrows() as f64 / pinvs[b].ncols() as f64;
        ra.total_cmp(&rb)
    });
    let ops: Vec<ModeOp<'_>> = order.iter().map(|&n| ModeOp::new(n, &pinvs[n])).collect();
    t.multi_mode_product(&ops).expect("conforming factors")
}

/// Orthonormal `rows x r` basis for the dominant range of `x` from a random
/// projection with `p` oversampling columns and `q` power iterations.
///
/// Without oversampling the basis of the sketch is returned as is;
/// otherwise the sketch basis is truncated to the `r` leading left singular
/// vectors of `Q^T X`, as in the randomized SVD.
pub(crate) fn randomized_basis<X: LinearOperator + ?Sized>(
    x: &X,
    r: usize,
    p: usize,
    q: usize,
    dist: Distribution,
    rng: &mut RandomStream,
) -> (DMatrix<f64>, usize) {
    let k = (r + p).min(x.nrows()).min(x.ncols()).max(r);
    let basis = range_finder(x, k, q, dist, rng);
    let mut passes = 1 + 2 * q;
    if basis.ncols() <= r {
        return (basis, passes);
    }
    let b = x.mul_t(&basis).transpose();
    passes += 1;
    (linalg::matmul(&basis, &linalg::svd_left(&b, r)), passes)
}

/// `1 - sqrt(max(|X|^2 - |S|^2, 0)) / |X|`, the fit of an orthogonal
/// projection model with core `S`.
pub(crate) fn projection_fit(norm_x: f64, core_norm: f64) -> f64 {
    if norm_x == 0.0 {
        return 1.0;
    }
    1.0 - (norm_x * norm_x - core_norm * core_norm).max(0.0).sqrt() / norm_x
}

/// True when `fit` from [`projection_fit`] is at the rounding floor of
/// `|X|^2 - |S|^2`, where fit changes are noise of order `sqrt(eps)`.
pub(crate) fn at_fit_floor(fit: f64) -> bool {
    let residual = 1.0 - fit;
    residual * residual <= 1e3 * f64::EPSILON
}
