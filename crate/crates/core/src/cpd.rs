//! CP decomposition by alternating least squares, and its acceleration by a
//! prior Tucker compression.

use nalgebra::DMatrix;

use crate::error::{mismatch, Result, TuckerError};
use crate::rng::RandomStream;
use crate::tensor::{linalg, DenseTensor};
use crate::tucker::{Algorithm, Decomposition, TuckerConfig};

/// `sum_r w_r a_r^(0) o a_r^(1) o ..`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    pub weights: Vec<f64>,
    pub factors: Vec<DMatrix<f64>>,
}

impl CpModel {
    pub fn new(weights: Vec<f64>, factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(TuckerError::InvalidShape("CP model needs at least one factor".into()));
        }
        if factors.iter().any(|f| f.ncols() != weights.len()) {
            return Err(mismatch(format!("every factor needs {} columns", weights.len())));
        }
        Ok(Self { weights, factors })
    }

    /// Unit weights.
    pub fn from_factors(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        let r = factors.first().map_or(0, |f| f.ncols());
        Self::new(vec![1.0; r], factors)
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn reconstruct(&self) -> DenseTensor {
        let dims = self.dims();
        let mut data = vec![0.0; dims.iter().product()];
        let mut column = Vec::new();
        for (r, &w) in self.weights.iter().enumerate() {
            column.clear();
            column.push(w);
            for f in &self.factors {
                let c = f.column(r);
                let prev = std::mem::take(&mut column);
                column.reserve(prev.len() * c.len());
                for &v in c.iter() {
                    column.extend(prev.iter().map(|&p| p * v));
                }
            }
            for (d, &v) in data.iter_mut().zip(&column) {
                *d += v;
            }
        }
        DenseTensor::from_vec(dims, data).expect("consistent shape")
    }

    /// Unit-norm factor columns with the scale in non-negative weights
    /// sorted in decreasing order. In every mode but the last, each column's
    /// largest-magnitude entry is made positive; the last mode takes the
    /// compensating signs.
    pub fn canonicalize(&mut self) {
        let last = self.order() - 1;
        for r in 0..self.rank() {
            let mut sign = 1.0;
            for (n, f) in self.factors.iter_mut().enumerate() {
                let mut col = f.column_mut(r);
                let norm = col.norm();
                if norm > 0.0 {
                    col /= norm;
                }
                self.weights[r] *= norm;
                if n < last {
                    let peak = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
                    if peak < 0.0 {
                        col.neg_mut();
                        sign = -sign;
                    }
                }
            }
            if sign * self.weights[r] < 0.0 {
                self.factors[last].column_mut(r).neg_mut();
            }
            self.weights[r] = self.weights[r].abs();
        }
        let mut order: Vec<usize> = (0..self.rank()).collect();
        order.sort_by(|&a, &b| self.weights[b].total_cmp(&self.weights[a]));
        self.weights = order.iter().map(|&r| self.weights[r]).collect();
        for f in &mut self.factors {
            *f = linalg::select_columns(f, &order);
        }
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }
}

/// Starting point of [`cp_als`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CpInit {
    /// Leading left singular vectors of each unfolding when the rank allows
    /// it, otherwise random.
    #[default]
    Auto,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpConfig {
    pub rank: usize,
    pub max_iters: usize,
    /// Stop when the fit changes by less than this.
    pub tol: f64,
    pub seed: u64,
    pub init: CpInit,
}

impl CpConfig {
    pub const DEFAULT_MAX_ITERS: usize = 200;
    pub const DEFAULT_TOL: f64 = 1e-10;

    pub fn new(rank: usize) -> Self {
        Self { rank, max_iters: Self::DEFAULT_MAX_ITERS, tol: Self::DEFAULT_TOL, seed: 0, init: CpInit::Auto }
    }

    pub fn max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn init(mut self, init: CpInit) -> Self {
        self.init = init;
        self
    }
}

#[derive(Debug, Clone)]
pub struct CpFit {
    pub model: CpModel,
    pub iterations: usize,
    /// Fit after each sweep, starting with the initial guess.
    pub fit_trace: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Relative ridge added to a singular normal-equation matrix.
const RIDGE: f64 = 1e-12;

/// CP-ALS: each sweep solves `A^(n) V = X_(n) K` for every mode, with `K`
/// the Khatri-Rao product of the other factors and `V` the Hadamard product
/// of their Gram matrices. The weights are folded into the factors during
/// the sweeps; the returned model is canonicalized.
pub fn cp_als(t: &DenseTensor, cfg: &CpConfig) -> Result<CpFit> {
    if cfg.rank == 0 {
        return Err(TuckerError::InvalidParameter("CP rank must be positive".into()));
    }
    let norm_x = t.frobenius_norm();
    if norm_x == 0.0 {
        return Err(TuckerError::ZeroTensor);
    }
    let order = t.order();
    let dims = t.dims();
    let use_svd = cfg.init == CpInit::Auto && dims.iter().all(|&d| cfg.rank <= d);
    let mut rng = RandomStream::new(cfg.seed);
    let mut factors: Vec<DMatrix<f64>> = (0..order)
        .map(|n| {
            if use_svd {
                Ok(linalg::leading_left_singular(&t.unfold(n)?, cfg.rank))
            } else {
                Ok(rng.gaussian_matrix(dims[n], cfg.rank))
            }
        })
        .collect::<Result<_>>()?;
    let unfoldings: Vec<DMatrix<f64>> = (0..order).map(|n| t.unfold(n)).collect::<Result<_>>()?;

    let fit_of = |factors: &[DMatrix<f64>]| -> Result<f64> {
        let model = CpModel::from_factors(factors.to_vec())?;
        Ok(1.0 - t.sub(&model.reconstruct())?.frobenius_norm() / norm_x)
    };
    let mut fit_trace = vec![fit_of(&factors)?];
    let mut warnings = Vec::new();
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        for n in 0..order {
            let others: Vec<usize> = (0..order).filter(|&p| p != n).collect();
            // Unfolding columns run over the other modes, first fastest, so
            // the Khatri-Rao product lists them last-to-first.
            let mut kr = factors[others[others.len() - 1]].clone();
            for &p in others.iter().rev().skip(1) {
                kr = linalg::khatri_rao(&kr, &factors[p])?;
            }
            let mut v = DMatrix::from_element(cfg.rank, cfg.rank, 1.0);
            for &p in &others {
                v.component_mul_assign(&linalg::matmul_tn(&factors[p], &factors[p]));
            }
            let mttkrp = linalg::matmul(&unfoldings[n], &kr);
            factors[n] = solve_normal(&v, &mttkrp, &mut warnings);
        }
        iterations += 1;
        let fit = fit_of(&factors)?;
        let prev = *fit_trace.last().expect("initial fit");
        fit_trace.push(fit);
        if (fit - prev).abs() < cfg.tol {
            break;
        }
    }
    Ok(CpFit { model: CpModel::from_factors(factors)?.canonical(), iterations, fit_trace, warnings })
}

/// `M V^{-1}` for symmetric positive semidefinite `V`, regularized when `V`
/// is numerically singular.
fn solve_normal(v: &DMatrix<f64>, m: &DMatrix<f64>, warnings: &mut Vec<String>) -> DMatrix<f64> {
    let scale = v.diagonal().max().max(f64::MIN_POSITIVE);
    let singular = linalg::inverse_condition(v) < RIDGE;
    let mut system = v.clone();
    if singular {
        let msg = "rank-deficient Khatri-Rao Gram matrix; ridge-regularized solve".to_string();
        if !warnings.contains(&msg) {
            log::warn!("{msg}");
            warnings.push(msg);
        }
        for i in 0..system.nrows() {
            system[(i, i)] += RIDGE * scale;
        }
    }
    match system.clone().cholesky() {
        Some(c) => c.solve(&m.transpose()).transpose(),
        None => linalg::matmul(m, &linalg::pinv(&system)),
    }
}

/// Tucker compression followed by CP of the core, lifted back by
/// `A^(n) = Q^(n) A~^(n)`.
#[derive(Debug, Clone)]
pub struct TuckerCp {
    pub model: CpModel,
    pub core_fit: CpFit,
    pub tucker: Decomposition,
}

/// Compresses `t` with `algo` at `tucker.rank`, runs [`cp_als`] on the
/// core, and lifts the factors. `cp.rank` may not exceed any Tucker rank.
pub fn tucker_then_cp(t: &DenseTensor, algo: Algorithm, tucker: &TuckerConfig, cp: &CpConfig) -> Result<TuckerCp> {
    if let Some((n, &r)) = tucker.rank.as_slice().iter().enumerate().find(|&(_, &r)| cp.rank > r) {
        return Err(TuckerError::InvalidParameter(format!(
            "CP rank {} exceeds Tucker rank {r} in mode {n}",
            cp.rank
        )));
    }
    let decomposition = algo.run(t, tucker)?;
    let core_fit = cp_als(decomposition.model.core(), cp)?;
    let factors = core_fit
        .model
        .factors
        .iter()
        .zip(decomposition.model.factors())
        .map(|(a, q)| linalg::matmul(q, a))
        .collect();
    let model = CpModel::new(core_fit.model.weights.clone(), factors)?.canonical();
    Ok(TuckerCp { model, core_fit, tucker: decomposition })
}

/// Greedy matching of the components of two CP models of equal order.
/// Component congruence is the product over modes of the absolute cosines
/// between matched columns; pairs are taken in decreasing congruence.
/// Returns, for each component of `a`, the matched component of `b` and
/// the congruence.
pub fn match_components(a: &CpModel, b: &CpModel) -> Result<Vec<(usize, f64)>> {
    if a.dims() != b.dims() {
        return Err(mismatch(format!("models of shape {:?} and {:?}", a.dims(), b.dims())));
    }
    let mut scores = Vec::with_capacity(a.rank() * b.rank());
    for r in 0..a.rank() {
        for s in 0..b.rank() {
            let c: f64 = a
                .factors
                .iter()
                .zip(&b.factors)
                .map(|(fa, fb)| {
                    let (x, y) = (fa.column(r), fb.column(s));
                    let denom = x.norm() * y.norm();
                    if denom > 0.0 {
                        x.dot(&y).abs() / denom
                    } else {
                        0.0
                    }
                })
                .product();
            scores.push((c, r, s));
        }
    }
    scores.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut out = vec![(usize::MAX, 0.0); a.rank()];
    let mut used = vec![false; b.rank()];
    for (c, r, s) in scores {
        if out[r].0 == usize::MAX && !used[s] {
            out[r] = (s, c);
            used[s] = true;
        }
    }
    Ok(out)
}

/// Smallest component congruence under [`match_components`]; zero when `a`
/// has components left unmatched.
pub fn congruence(a: &CpModel, b: &CpModel) -> Result<f64> {
    let matched = match_components(a, b)?;
    Ok(matched.iter().map(|&(s, c)| if s == usize::MAX { 0.0 } else { c }).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::tucker::TuckerConfig;

    fn random_cp(dims: &[usize], rank: usize, seed: u64) -> CpModel {
        let mut rng = RandomStream::new(seed);
        let factors = dims.iter().map(|&d| rng.gaussian_matrix(d, rank)).collect();
        CpModel::new((1..=rank).map(|r| r as f64 + 1.0).collect(), factors).unwrap()
    }

    #[test]
    fn reconstruct_matches_outer_products() {
        let m = random_cp(&[3, 4, 2], 2, 1);
        let t = m.reconstruct();
        let f = &m.factors;
        for (i, j, k) in [(0, 0, 0), (2, 3, 1), (1, 2, 0)] {
            let v: f64 = (0..2).map(|r| m.weights[r] * f[0][(i, r)] * f[1][(j, r)] * f[2][(k, r)]).sum();
            assert!((t.get(&[i, j, k]) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn canonical_form_preserves_tensor() {
        let m = random_cp(&[4, 3, 5], 3, 2);
        let c = m.clone().canonical();
        let diff = c.reconstruct().sub(&m.reconstruct()).unwrap().frobenius_norm();
        assert!(diff < 1e-12 * m.reconstruct().frobenius_norm());
        for w in c.weights.windows(2) {
            assert!(w[0] >= w[1] && w[1] >= 0.0);
        }
        for f in &c.factors {
            for col in f.column_iter() {
                assert!((col.norm() - 1.0).abs() < 1e-14);
            }
        }
        let again = c.clone().canonical();
        for (x, y) in again.factors.iter().zip(&c.factors) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn exact_rank_three_is_recovered() {
        let truth = random_cp(&[10, 10, 10], 3, 3);
        let t = truth.reconstruct();
        let fit = cp_als(&t, &CpConfig::new(3).tol(1e-14).max_iters(500)).unwrap();
        assert!(*fit.fit_trace.last().unwrap() >= 1.0 - 1e-8, "{:?}", fit.fit_trace.last());
        assert!(congruence(&fit.model, &truth).unwrap() >= 0.999);
        for w in fit.fit_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn rank_one_factors_are_collinear() {
        let truth = random_cp(&[5, 6, 4], 1, 4);
        let fit = cp_als(&truth.reconstruct(), &CpConfig::new(1)).unwrap();
        assert!(congruence(&fit.model, &truth).unwrap() >= 0.999);
    }

    #[test]
    fn singular_normal_matrix_is_regularized() {
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let m = DMatrix::from_row_slice(1, 2, &[2.0, 2.0]);
        let mut warnings = Vec::new();
        let x = solve_normal(&v, &m, &mut warnings);
        assert_eq!(warnings.len(), 1);
        assert!(x.iter().all(|v| v.is_finite()));
        assert!((&x * &v - &m).norm() < 1e-6);
        solve_normal(&v, &m, &mut warnings);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn identity_compression_matches_direct_als() {
        let truth = random_cp(&[6, 5, 4], 2, 6);
        let t = truth.reconstruct();
        let cp = CpConfig::new(2).tol(1e-14);
        let direct = cp_als(&t, &cp).unwrap();
        let tc = TuckerConfig::with_ranks(vec![6, 5, 4]).unwrap();
        let via = tucker_then_cp(&t, Algorithm::Thosvd, &tc, &cp).unwrap();
        let e_direct = metrics::relative_error_dense(&t, &direct.model.reconstruct()).unwrap();
        let e_via = metrics::relative_error_dense(&t, &via.model.reconstruct()).unwrap();
        assert!((e_direct - e_via).abs() <= 1e-8);
    }

    #[test]
    fn lifting_preserves_structure() {
        let truth = random_cp(&[12, 11, 10], 3, 7);
        let t = truth.reconstruct();
        let tc = TuckerConfig::with_ranks(vec![4, 4, 4]).unwrap();
        let via = tucker_then_cp(&t, Algorithm::RSthosvd, &tc, &CpConfig::new(3)).unwrap();
        let core_cp = via.core_fit.model.reconstruct();
        let lifted = crate::tensor::TuckerModel::new(core_cp, via.tucker.model.factors().to_vec()).unwrap().reconstruct();
        let diff = lifted.sub(&via.model.reconstruct()).unwrap().frobenius_norm();
        assert!(diff <= 1e-12 * lifted.frobenius_norm());
    }

    #[test]
    fn cp_rank_above_tucker_rank_is_rejected() {
        let t = random_cp(&[5, 5, 5], 2, 8).reconstruct();
        let tc = TuckerConfig::with_ranks(vec![3, 2, 3]).unwrap();
        assert!(tucker_then_cp(&t, Algorithm::Sthosvd, &tc, &CpConfig::new(3)).is_err());
    }

    #[test]
    fn greedy_matching_finds_permutation() {
        let a = random_cp(&[5, 4, 3], 3, 9).canonical();
        let order = [2, 0, 1];
        let b = CpModel::new(
            order.iter().map(|&r| a.weights[r]).collect(),
            a.factors.iter().map(|f| linalg::select_columns(f, &order) * -1.0).collect(),
        )
        .unwrap();
        let m = match_components(&a, &b).unwrap();
        for (r, &(s, c)) in m.iter().enumerate() {
            assert_eq!(order[s], r);
            assert!((c - 1.0).abs() < 1e-12);
        }
    }
}
