//! Single-pass Tucker approximation from range and core sketches.

use std::cell::Cell;

use nalgebra::DMatrix;

use super::config::{Decomposition, TuckerConfig};
use super::hosvd::sthosvd;
use crate::error::{Result, TuckerError};
use crate::rng::RandomStream;
use crate::sketch::single_pass::CONDITION_WARNING;
use crate::tensor::{linalg, DenseTensor, ModeOp, Shape, TuckerModel};

/// A tensor read as a sequence of slabs along its last mode.
pub trait TensorSource {
    fn shape(&self) -> &Shape;
    /// Visit every last-mode slab once, in order. Slab `i` has the shape
    /// of the tensor with its last mode size set to one.
    fn stream_slabs(&self, f: &mut dyn FnMut(usize, &DenseTensor));
}

impl TensorSource for DenseTensor {
    fn shape(&self) -> &Shape {
        DenseTensor::shape(self)
    }

    fn stream_slabs(&self, f: &mut dyn FnMut(usize, &DenseTensor)) {
        let last = self.order() - 1;
        let slab_shape = self.shape().with_dim(last, 1).expect("valid shape");
        let len = slab_shape.len();
        for i in 0..self.dims()[last] {
            let slab = DenseTensor::new(slab_shape.clone(), self.data()[i * len..(i + 1) * len].to_vec())
                .expect("slab length");
            f(i, &slab);
        }
    }
}

/// A dense tensor that counts how many times it has been streamed.
#[derive(Debug, Clone)]
pub struct CountingTensor {
    tensor: DenseTensor,
    passes: Cell<usize>,
}

impl CountingTensor {
    pub fn new(tensor: DenseTensor) -> Self {
        Self { tensor, passes: Cell::new(0) }
    }

    pub fn passes(&self) -> usize {
        self.passes.get()
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.tensor
    }
}

impl TensorSource for CountingTensor {
    fn shape(&self) -> &Shape {
        self.tensor.shape()
    }

    fn stream_slabs(&self, f: &mut dyn FnMut(usize, &DenseTensor)) {
        self.passes.set(self.passes.get() + 1);
        self.tensor.stream_slabs(f);
    }
}

/// Sketch sizes `(K, S)` for R-PET, defaulting to `K_n = 2 R_n` and
/// `S_n = 2 K_n + 1`, both clamped to `I_n`.
pub fn pet_sizes(shape: &Shape, cfg: &TuckerConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = shape.order();
    let k = match &cfg.pet_k {
        Some(k) => k.clone(),
        None => (0..n).map(|m| (2 * cfg.rank.get(m)).min(shape.dim(m))).collect(),
    };
    let s = match &cfg.pet_s {
        Some(s) => s.clone(),
        None => k.iter().enumerate().map(|(m, &km)| (2 * km + 1).min(shape.dim(m))).collect(),
    };
    if k.len() != n || s.len() != n {
        return Err(TuckerError::InvalidParameter("sketch sizes need one entry per mode".into()));
    }
    for m in 0..n {
        let r = cfg.rank.get(m);
        if !(r <= k[m] && k[m] <= s[m]) {
            return Err(TuckerError::InvalidParameter(format!(
                "mode {m}: need R <= K <= S, got R={r}, K={}, S={}",
                k[m], s[m]
            )));
        }
        if k[m] > shape.dim(m) || k[m] > shape.len_without(m) {
            return Err(TuckerError::RankTooLarge { rank: k[m], dim: shape.dim(m).min(shape.len_without(m)) });
        }
    }
    Ok((k, s))
}

/// R-PET: one sweep over the tensor forms the range sketches
/// `Y_n = X_(n) Omega_n` and the core sketch
/// `H = X x_1 Psi_1 .. x_N Psi_N`; then `Q^(n) = orth(Y_n)`,
/// `S = H x_n (Psi_n Q^(n))^+`, and the `K_1 x .. x K_N` core is truncated
/// to the target rank by STHOSVD, whose factors are absorbed into `Q^(n)`.
pub fn r_pet<T: TensorSource + ?Sized>(t: &T, cfg: &TuckerConfig) -> Result<Decomposition> {
    let shape = t.shape().clone();
    cfg.checked_order(&shape)?;
    let order = shape.order();
    if order < 2 {
        return Err(TuckerError::InvalidParameter("R-PET needs a tensor of order at least 2".into()));
    }
    let (k, s) = pet_sizes(&shape, cfg)?;
    let dims = shape.dims().to_vec();
    let last = order - 1;
    let root = RandomStream::new(cfg.seed);
    let omegas: Vec<DMatrix<f64>> = (0..order)
        .map(|n| root.substream(n as u64).matrix(shape.len_without(n), k[n], cfg.distribution))
        .collect();
    let psis: Vec<DMatrix<f64>> = (0..order)
        .map(|n| root.substream(0x100 + n as u64).matrix(s[n], dims[n], cfg.distribution))
        .collect();

    let mut ys: Vec<DMatrix<f64>> = (0..order).map(|n| DMatrix::zeros(dims[n], k[n])).collect();
    let h_shape = Shape::new(s.clone())?;
    let slab_h_len = h_shape.len() / s[last];
    let mut h = vec![0.0; h_shape.len()];
    let slab_cols: Vec<usize> = (0..last).map(|n| shape.len_without(n) / dims[last]).collect();

    t.stream_slabs(&mut |i, slab| {
        for n in 0..last {
            let block = omegas[n].rows(i * slab_cols[n], slab_cols[n]).into_owned();
            ys[n] += slab.unfold_mul(n, &block).expect("conforming slab");
        }
        let row = DMatrix::from_row_slice(1, slab.len(), slab.data());
        let y_last = linalg::matmul(&row, &omegas[last]);
        ys[last].row_mut(i).copy_from(&y_last.row(0));
        let ops: Vec<ModeOp<'_>> = (0..last).map(|n| ModeOp::new(n, &psis[n])).collect();
        let hs = slab.multi_mode_product(&ops).expect("conforming slab");
        for j in 0..s[last] {
            let w = psis[last][(j, i)];
            let dst = &mut h[j * slab_h_len..(j + 1) * slab_h_len];
            for (d, v) in dst.iter_mut().zip(hs.data()) {
                *d += w * v;
            }
        }
    });
    let h = DenseTensor::new(h_shape, h)?;

    let mut warnings = Vec::new();
    let qs: Vec<DMatrix<f64>> = ys.iter().map(linalg::orthonormalize).collect();
    let mut inverses = Vec::with_capacity(order);
    for n in 0..order {
        let m = linalg::matmul(&psis[n], &qs[n]);
        let inv_cond = linalg::inverse_condition(&m);
        if inv_cond * CONDITION_WARNING < 1.0 {
            warnings.push(format!("core sketch of mode {n} is ill-conditioned (condition {:.3e})", 1.0 / inv_cond));
        }
        inverses.push(linalg::pinv(&m));
    }
    let ops: Vec<ModeOp<'_>> = (0..order).map(|n| ModeOp::new(n, &inverses[n])).collect();
    let big_core = h.multi_mode_product(&ops)?;

    let mut trunc_cfg = TuckerConfig::new(cfg.rank.clone());
    trunc_cfg.leading = cfg.leading;
    let small = sthosvd(&big_core, &trunc_cfg)?;
    let (core, us) = small.model.into_parts();
    let factors: Vec<DMatrix<f64>> = qs.iter().zip(&us).map(|(q, u)| linalg::matmul(q, u)).collect();
    let mut out = Decomposition::direct(TuckerModel::new(core, factors)?, 1);
    for w in warnings {
        out.warn(w);
    }
    Ok(out)
}
