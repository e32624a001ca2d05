//! Accuracy and storage metrics for Tucker models.

use crate::error::{mismatch, Result, TuckerError};
use crate::tensor::{DenseTensor, TuckerModel};

/// `|X - X^|_F / |X|_F`.
pub fn relative_error(t: &DenseTensor, model: &TuckerModel) -> Result<f64> {
    if t.dims() != model.dims().as_slice() {
        return Err(mismatch(format!("tensor {} vs model {:?}", t.shape(), model.dims())));
    }
    relative_error_dense(t, &model.reconstruct())
}

/// `|X - Y|_F / |X|_F` for two tensors of the same shape.
pub fn relative_error_dense(t: &DenseTensor, approx: &DenseTensor) -> Result<f64> {
    let norm = t.frobenius_norm();
    if norm == 0.0 {
        return Err(TuckerError::ZeroTensor);
    }
    Ok(t.sub(approx)?.frobenius_norm() / norm)
}

/// `1 - relative_error`.
pub fn fit(t: &DenseTensor, model: &TuckerModel) -> Result<f64> {
    Ok(1.0 - relative_error(t, model)?)
}

/// Inverse compression ratio `S2 / S1` with `S1 = prod I_n` and
/// `S2 = prod R_n + sum I_n R_n`.
pub fn compression_ratio_inv(dims: &[usize], ranks: &[usize]) -> Result<f64> {
    if dims.len() != ranks.len() {
        return Err(mismatch(format!("{} dims vs {} ranks", dims.len(), ranks.len())));
    }
    let full: f64 = dims.iter().map(|&d| d as f64).product();
    let core: f64 = ranks.iter().map(|&r| r as f64).product();
    let factors: f64 = dims.iter().zip(ranks).map(|(&d, &r)| (d * r) as f64).sum();
    Ok((core + factors) / full)
}

/// Signal-to-noise ratio in dB, `20 log10(|signal|_F / |noise|_F)`.
pub fn snr_db(signal: &DenseTensor, noise: &DenseTensor) -> f64 {
    20.0 * (signal.frobenius_norm() / noise.frobenius_norm()).log10()
}
