use crate::error::{Result, TuckerError};
use crate::tensor::{linalg, DenseTensor, TuckerModel, ORTHONORMAL_TOL};

/// Per-mode residuals `|X_(n) - Q^(n) Q^(n)^T X_(n)|_F` of a model with
/// orthonormal factors. Their squares bound the squared Tucker error from
/// above.
///
/// The projection is subtracted explicitly rather than taking
/// `|X|^2 - |Q^T X_(n)|^2`, which cancels badly for accurate models.
pub fn mlrank_residual(t: &DenseTensor, model: &TuckerModel) -> Result<Vec<f64>> {
    if t.dims() != model.dims().as_slice() {
        return Err(TuckerError::DimensionMismatch(format!(
            "tensor {} vs model {:?}",
            t.shape(),
            model.dims()
        )));
    }
    let mut out = Vec::with_capacity(t.order());
    for (n, q) in model.factors().iter().enumerate() {
        if !linalg::is_orthonormal(q, ORTHONORMAL_TOL.max(1e-9)) {
            return Err(TuckerError::NotOrthonormal(n));
        }
        let projected = t.mode_product_t(q, n)?.mode_product(q, n)?;
        out.push(t.sub(&projected)?.frobenius_norm());
    }
    Ok(out)
}
