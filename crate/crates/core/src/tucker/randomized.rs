//! Random-projection HOSVD and randomized sequentially truncated HOSVD.

use nalgebra::DMatrix;

use super::common::{project_all, randomized_basis};
use super::config::{Decomposition, TuckerConfig};
use crate::error::Result;
use crate::rng::RandomStream;
use crate::sketch::{range_finder, Unfolding};
use crate::tensor::{linalg, DenseTensor, ModeOp, TuckerModel};

/// Random-projection HOSVD: `Q^(n)` spans `X_(n) Omega^(n)` with
/// `R_n + p` Gaussian columns (clamped to the unfolding size) and `q`
/// power iterations; with oversampling the basis is truncated back to
/// `R_n` through the SVD of `Q^T X_(n)`.
///
/// With `cfg.memory_efficient` the sketch is `X x_{p!=n} Omega_p^T` with
/// small per-mode Gaussian matrices, so no tall random matrix is stored;
/// power iterations are not applied in that mode.
pub fn rp_hosvd(t: &DenseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
    cfg.checked_order(t.shape())?;
    let root = RandomStream::new(cfg.seed);
    let order = t.order();
    let mut passes = 1;
    let mut factors = Vec::with_capacity(order);
    for n in 0..order {
        let mut rng = root.substream(n as u64);
        let r = cfg.rank.get(n);
        let q = if cfg.memory_efficient && order > 1 {
            passes += 1;
            kronecker_sketch_basis(t, n, r, cfg, &mut rng)?
        } else {
            let (q, p) = randomized_basis(
                &Unfolding::new(t, n),
                r,
                cfg.oversampling,
                cfg.power_iterations,
                cfg.distribution,
                &mut rng,
            );
            passes += p;
            q
        };
        factors.push(q);
    }
    let core = project_all(t, &factors);
    Ok(Decomposition::direct(TuckerModel::new(core, factors)?, passes))
}

/// Basis from `W = X x_{p!=n} Omega_p^T`, where `Omega_p` is `I_p x K_p`
/// with `prod K_p >= R_n + p`.
fn kronecker_sketch_basis(
    t: &DenseTensor,
    n: usize,
    r: usize,
    cfg: &TuckerConfig,
    rng: &mut RandomStream,
) -> Result<DMatrix<f64>> {
    let target = (r + cfg.oversampling) as f64;
    let others = (t.order() - 1) as f64;
    let k = target.powf(1.0 / others).ceil() as usize;
    let omegas: Vec<(usize, DMatrix<f64>)> = (0..t.order())
        .filter(|&p| p != n)
        .map(|p| {
            let kp = k.min(t.dims()[p]);
            (p, rng.matrix(t.dims()[p], kp, cfg.distribution))
        })
        .collect();
    let ops: Vec<ModeOp<'_>> = omegas.iter().map(|(p, m)| ModeOp::transposed(*p, m)).collect();
    let w = t.multi_mode_product(&ops)?.unfold(n)?;
    Ok(linalg::svd_left(&w, r))
}

/// Randomized STHOSVD: STHOSVD with the truncated SVD of each working
/// unfolding replaced by a randomized SVD.
///
/// The working tensor is truncated through `B = Q^T S_(n)` from the range
/// finder, which avoids a separate mode product.
pub fn r_sthosvd(t: &DenseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
    let order = cfg.checked_order(t.shape())?;
    let root = RandomStream::new(cfg.seed);
    let mut factors: Vec<Option<DMatrix<f64>>> = vec![None; t.order()];
    let mut s = t.clone();
    let mut passes = 0;
    for &n in &order {
        let r = cfg.rank.get(n);
        let mut rng = root.substream(n as u64);
        let op = Unfolding::new(&s, n);
        let k = (r + cfg.oversampling).min(s.dims()[n]).min(s.shape().len_without(n)).max(r);
        let basis = range_finder(&op, k, cfg.power_iterations, cfg.distribution, &mut rng);
        let b = s.unfold_t_mul(n, &basis)?.transpose();
        if n == order[0] {
            passes = 2 + 2 * cfg.power_iterations;
        }
        let (q, reduced) = if basis.ncols() > r {
            let u = linalg::svd_left(&b, r);
            (linalg::matmul(&basis, &u), linalg::matmul_tn(&u, &b))
        } else {
            (basis, b)
        };
        s = DenseTensor::fold(&reduced, n, &s.shape().with_dim(n, r)?)?;
        factors[n] = Some(q);
    }
    let factors = factors.into_iter().map(|f| f.expect("every mode visited")).collect();
    Ok(Decomposition::direct(TuckerModel::new(s, factors)?, passes))
}
