//! Fiber-sampling Tucker approximations: R-ST and R-HOID.

use nalgebra::DMatrix;

use super::common::pinv_core;
use super::config::{Decomposition, TuckerConfig};
use crate::error::Result;
use crate::rng::RandomStream;
use crate::sketch::{range_finder, sampling, Unfolding};
use crate::tensor::{linalg, DenseTensor, SparseTensor, TuckerModel};

/// Relative smallest singular value below which sampled fibers count as
/// rank deficient.
const RANK_TOL: f64 = 1e-10;
/// Redraws attempted when sampled fibers are rank deficient.
const MAX_RESAMPLES: usize = 3;

/// Fiber access shared by dense and sparse inputs.
trait FiberSource {
    fn order(&self) -> usize;
    fn dims(&self) -> &[usize];
    fn fiber_norms_sq(&self, mode: usize) -> Vec<f64>;
    fn fibers(&self, mode: usize, columns: &[usize]) -> DMatrix<f64>;
    fn pinv_core(&self, factors: &[DMatrix<f64>]) -> Result<DenseTensor>;
}

impl FiberSource for DenseTensor {
    fn order(&self) -> usize {
        DenseTensor::order(self)
    }

    fn dims(&self) -> &[usize] {
        DenseTensor::dims(self)
    }

    fn fiber_norms_sq(&self, mode: usize) -> Vec<f64> {
        DenseTensor::fiber_norms_sq(self, mode).expect("mode in range")
    }

    fn fibers(&self, mode: usize, columns: &[usize]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dims()[mode], columns.len());
        for (c, &j) in columns.iter().enumerate() {
            let f = self.fiber(mode, j).expect("column in range");
            out.column_mut(c).copy_from_slice(&f);
        }
        out
    }

    fn pinv_core(&self, factors: &[DMatrix<f64>]) -> Result<DenseTensor> {
        Ok(pinv_core(self, factors))
    }
}

impl FiberSource for SparseTensor {
    fn order(&self) -> usize {
        SparseTensor::order(self)
    }

    fn dims(&self) -> &[usize] {
        SparseTensor::dims(self)
    }

    fn fiber_norms_sq(&self, mode: usize) -> Vec<f64> {
        SparseTensor::fiber_norms_sq(self, mode).expect("mode in range")
    }

    fn fibers(&self, mode: usize, columns: &[usize]) -> DMatrix<f64> {
        SparseTensor::fibers(self, mode, columns).expect("columns in range")
    }

    fn pinv_core(&self, factors: &[DMatrix<f64>]) -> Result<DenseTensor> {
        // The first product densifies; the rest run on the small result.
        let pinvs: Vec<DMatrix<f64>> = factors.iter().map(linalg::pinv).collect();
        let mut core = self.mode_product_dense(&pinvs[0], 0, false)?;
        for (n, p) in pinvs.iter().enumerate().skip(1) {
            core = core.mode_product(p, n)?;
        }
        Ok(core)
    }
}

fn full_column_rank(m: &DMatrix<f64>) -> bool {
    linalg::inverse_condition(m) > RANK_TOL
}

fn r_st_impl<T: FiberSource + ?Sized>(t: &T, cfg: &TuckerConfig) -> Result<Decomposition> {
    let root = RandomStream::new(cfg.seed);
    let mut factors = Vec::with_capacity(t.order());
    let mut selected = Vec::with_capacity(t.order());
    let mut warnings = Vec::new();
    let mut passes = 1;
    for n in 0..t.order() {
        let r = cfg.rank.get(n);
        let cols: usize = t.dims().iter().enumerate().filter(|&(k, _)| k != n).map(|(_, d)| d).product();
        let probs = match cfg.sampling {
            sampling::SamplingDistribution::Uniform => vec![1.0 / cols as f64; cols],
            dist => {
                passes += 1;
                sampling::probabilities(dist, &t.fiber_norms_sq(n), r)?
            }
        };
        let mut attempt = 0;
        let (idx, q) = loop {
            let mut rng = root.substream(((attempt as u64) << 16) | n as u64);
            let idx = sampling::draw(&probs, r, cfg.replacement, &mut rng)?;
            let q = t.fibers(n, &idx);
            if full_column_rank(&q) {
                break (idx, q);
            }
            attempt += 1;
            if attempt > MAX_RESAMPLES {
                warnings.push(format!(
                    "mode {n}: sampled fibers stay rank deficient after {MAX_RESAMPLES} redraws; using the pseudoinverse"
                ));
                break (idx, q);
            }
        };
        factors.push(q);
        selected.push(idx);
    }
    let core = t.pinv_core(&factors)?;
    let flags = vec![false; factors.len()];
    let mut out = Decomposition::direct(TuckerModel::with_flags(core, factors, flags)?, passes);
    out.selected = Some(selected);
    for w in warnings {
        out.warn(w);
    }
    Ok(out)
}

/// R-ST: `Q^(n)` holds `R_n` sampled mode-`n` fibers (raw, unscaled
/// columns of the unfolding), and the core is
/// `X x_1 Q^(1)^+ .. x_N Q^(N)^+`. Rank-deficient draws are redrawn up to
/// three times before falling back to the pseudoinverse with a warning.
pub fn r_st(t: &DenseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
    cfg.checked_order(t.shape())?;
    r_st_impl(t, cfg)
}

/// [`r_st`] on a sparse tensor; fibers are gathered from the nonzeros.
pub fn r_st_sparse(t: &SparseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
    cfg.checked_order(t.shape())?;
    r_st_impl(t, cfg)
}

/// Randomized higher-order interpolatory decomposition. Per mode, an
/// orthonormal basis `Q` of `X_(n) Omega` (`R_n + p` columns, `q` power
/// iterations) reduces the unfolding to `Z = Q^T X_(n)`; column-pivoted QR
/// of `Z` picks `R_n` columns `p`, and `Q^(n) = X_(n)(:, p)`. The core is
/// `X x_1 Q^(1)^+ .. x_N Q^(N)^+`.
pub fn r_hoid(t: &DenseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
    cfg.checked_order(t.shape())?;
    let root = RandomStream::new(cfg.seed);
    let mut factors = Vec::with_capacity(t.order());
    let mut selected = Vec::with_capacity(t.order());
    let mut warnings = Vec::new();
    let mut passes = 1;
    for n in 0..t.order() {
        let r = cfg.rank.get(n);
        let k = cfg.sketch_size(n, t.dims()[n].min(t.shape().len_without(n)));
        let mut rng = root.substream(n as u64);
        let basis = range_finder(&Unfolding::new(t, n), k, cfg.power_iterations, cfg.distribution, &mut rng);
        let z = t.unfold_t_mul(n, &basis)?.transpose();
        passes += 2 + 2 * cfg.power_iterations;
        let f = linalg::pivoted_qr(&z);
        let idx: Vec<usize> = f.perm[..r].to_vec();
        let (r11_first, r11_last) = (f.r[(0, 0)].abs(), f.r[(r - 1, r - 1)].abs());
        if r11_last <= RANK_TOL * r11_first {
            warnings.push(format!("mode {n}: R11 is numerically singular; using the pseudoinverse"));
        }
        factors.push(t.fibers(n, &idx));
        selected.push(idx);
    }
    let core = pinv_core(t, &factors);
    let flags = vec![false; factors.len()];
    let mut out = Decomposition::direct(TuckerModel::with_flags(core, factors, flags)?, passes);
    out.selected = Some(selected);
    for w in warnings {
        out.warn(w);
    }
    Ok(out)
}
