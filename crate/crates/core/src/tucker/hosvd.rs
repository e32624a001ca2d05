//! Truncated and sequentially truncated HOSVD.

use nalgebra::DMatrix;

use super::common::{leading_vectors, project_all};
use super::config::{Decomposition, TuckerConfig};
use crate::error::Result;
use crate::tensor::{linalg, DenseTensor, TuckerModel};

/// Truncated HOSVD: `Q^(n)` are the `R_n` leading left singular vectors of
/// each unfolding of `t`, and the core is `t x_1 Q^(1)^T .. x_N Q^(N)^T`.
pub fn thosvd(t: &DenseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
    cfg.checked_order(t.shape())?;
    let factors: Vec<DMatrix<f64>> =
        (0..t.order()).map(|n| leading_vectors(t, n, cfg.rank.get(n), cfg.leading)).collect();
    let core = project_all(t, &factors);
    Ok(Decomposition::direct(TuckerModel::new(core, factors)?, t.order() + 1))
}

/// Sequentially truncated HOSVD: modes are visited in `cfg.mode_order`;
/// each factor comes from the current, already truncated, working tensor.
pub fn sthosvd(t: &DenseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
    let order = cfg.checked_order(t.shape())?;
    let mut factors: Vec<Option<DMatrix<f64>>> = vec![None; t.order()];
    let mut s = t.clone();
    for &n in &order {
        let r = cfg.rank.get(n);
        let q = if cfg.sthosvd_shortcut {
            // S_(n) ~ U_r Sigma_r V_r^T, so S x_n U_r^T folds Sigma_r V_r^T.
            let (u, sv, v) = linalg::svd_truncated(&s.unfold(n)?, r);
            let mut reduced = v.transpose();
            for (i, &sigma) in sv.iter().enumerate() {
                reduced.row_mut(i).scale_mut(sigma);
            }
            s = DenseTensor::fold(&reduced, n, &s.shape().with_dim(n, r)?)?;
            u
        } else {
            let u = leading_vectors(&s, n, r, cfg.leading);
            s = s.mode_product_t(&u, n)?;
            u
        };
        factors[n] = Some(q);
    }
    let factors = factors.into_iter().map(|f| f.expect("every mode visited")).collect();
    Ok(Decomposition::direct(TuckerModel::new(s, factors)?, 2))
}

