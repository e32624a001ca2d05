//! Higher-order orthogonal iteration and its random-projection variant.

use nalgebra::DMatrix;

use super::common::{leading_vectors, project_all, project_except, projection_fit, randomized_basis, at_fit_floor};
use super::config::{Decomposition, HooiInit, TuckerConfig};
use crate::error::Result;
use crate::rng::RandomStream;
use crate::sketch::Unfolding;
use crate::tensor::{linalg, DenseTensor, TuckerModel};

/// Starting factors; returns them with the number of passes spent.
fn initial_factors(t: &DenseTensor, cfg: &TuckerConfig, init: HooiInit) -> (Vec<DMatrix<f64>>, usize) {
    match init {
        HooiInit::Hosvd => {
            let f = (0..t.order()).map(|n| leading_vectors(t, n, cfg.rank.get(n), cfg.leading)).collect();
            (f, t.order())
        }
        HooiInit::Random => {
            let root = RandomStream::new(cfg.seed).substream(0xA11);
            let f = (0..t.order())
                .map(|n| {
                    let g = root.substream(n as u64).gaussian_matrix(t.dims()[n], cfg.rank.get(n));
                    linalg::orthonormalize(&g)
                })
                .collect();
            (f, 0)
        }
    }
}

/// Shared sweep loop: `update(n, z, iteration)` returns the new factor for
/// mode `n` from `z = t x_{p != n} Q^(p)^T`.
fn iterate(
    t: &DenseTensor,
    cfg: &TuckerConfig,
    mut factors: Vec<DMatrix<f64>>,
    mut passes: usize,
    mut update: impl FnMut(usize, &DenseTensor, usize) -> (DMatrix<f64>, usize),
) -> Result<Decomposition> {
    let norm_x = t.frobenius_norm();
    let mut core = project_all(t, &factors);
    passes += 1;
    let mut fit_trace = vec![projection_fit(norm_x, core.frobenius_norm())];
    let mut iterations = 0;
    let last = t.order() - 1;
    while iterations < cfg.max_iters {
        let mut z_last = None;
        for n in 0..t.order() {
            let z = project_except(t, &factors, n);
            passes += 1;
            let (q, extra) = update(n, &z, iterations);
            passes += extra;
            factors[n] = q;
            if n == last {
                z_last = Some(z);
            }
        }
        core = z_last.expect("at least one mode").mode_product_t(&factors[last], last)?;
        iterations += 1;
        let fit = projection_fit(norm_x, core.frobenius_norm());
        let prev = *fit_trace.last().expect("initial fit");
        fit_trace.push(fit);
        if (fit - prev).abs() < cfg.tol || at_fit_floor(fit) {
            break;
        }
    }
    Ok(Decomposition {
        model: TuckerModel::new(core, factors)?,
        iterations,
        passes,
        fit_trace,
        selected: None,
        warnings: Vec::new(),
    })
}

/// HOOI: each factor becomes the leading left singular vectors of
/// `t x_{p != n} Q^(p)^T`, sweeping modes in ascending order until the fit
/// changes by less than `cfg.tol` or `cfg.max_iters` sweeps.
/// Initialized with truncated HOSVD unless `cfg.init` says otherwise.
pub fn hooi(t: &DenseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
    cfg.checked_order(t.shape())?;
    let (factors, passes) = initial_factors(t, cfg, cfg.init.unwrap_or(HooiInit::Hosvd));
    iterate(t, cfg, factors, passes, |n, z, _| (leading_vectors(z, n, cfg.rank.get(n), cfg.leading), 0))
}

/// Random-projection HOOI: the SVD step of HOOI is replaced by an
/// orthonormal basis of `Z_(n) Omega` for the small projected tensor `Z`.
/// Initialized with random orthonormal factors unless `cfg.init` says
/// otherwise.
pub fn rp_hooi(t: &DenseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
    cfg.checked_order(t.shape())?;
    let (factors, passes) = initial_factors(t, cfg, cfg.init.unwrap_or(HooiInit::Random));
    let root = RandomStream::new(cfg.seed);
    iterate(t, cfg, factors, passes, |n, z, it| {
        let mut rng = root.substream(((it as u64 + 1) << 16) | n as u64);
        let (q, _) = randomized_basis(
            &Unfolding::new(z, n),
            cfg.rank.get(n),
            cfg.oversampling,
            cfg.power_iterations,
            cfg.distribution,
            &mut rng,
        );
        (q, 0)
    })
}
