//! HOOI with the factor and core updates solved as (sketched) least-squares
//! problems.

use nalgebra::DMatrix;

use super::common::{at_fit_floor, leading_vectors, project_all, project_except, projection_fit};
use super::config::{Decomposition, HooiInit, LsSketch, TuckerConfig};
use crate::error::Result;
use crate::rng::RandomStream;
use crate::sketch::count_sketch::Side;
use crate::sketch::lsq::{cgls, count_sketch_rows, solve_least_squares, KroneckerRows};
use crate::sketch::{CountSketchOp, KroneckerSketch};
use crate::tensor::{linalg, DenseTensor, ModeOp, TuckerModel};

const CGLS_TOL: f64 = 1e-12;
const CGLS_MAX_ITERS: usize = 100;

/// Count-sketches drawn once and reused by every sweep, together with the
/// sketched data.
struct Sketches {
    factor_ops: Vec<CountSketchOp>,
    /// `T_n X_(n)^T`, `L_n x I_n`.
    factor_rhs: Vec<DMatrix<f64>>,
    core_op: CountSketchOp,
    /// `T vec(X)`.
    core_rhs: DMatrix<f64>,
}

impl Sketches {
    fn new(t: &DenseTensor, ranks: &[usize], multiplier: usize, root: &RandomStream) -> Result<Self> {
        let dims = t.dims();
        let mut factor_ops = Vec::with_capacity(t.order());
        let mut factor_rhs = Vec::with_capacity(t.order());
        for n in 0..t.order() {
            let others: Vec<usize> = (0..t.order()).filter(|&p| p != n).map(|p| dims[p]).collect();
            let kron_cols: usize = (0..t.order()).filter(|&p| p != n).map(|p| ranks[p]).product();
            let seed = root.substream(0x200 + n as u64).next_u64();
            let op = CountSketchOp::tensor(&others, multiplier * kron_cols, seed)?;
            factor_rhs.push(op.apply_unfolding(t, n)?.transpose());
            factor_ops.push(op);
        }
        let unknowns: usize = ranks.iter().product();
        let seed = root.substream(0x300).next_u64();
        let core_op = CountSketchOp::tensor(dims, multiplier * unknowns, seed)?;
        let x = DMatrix::from_column_slice(t.len(), 1, t.data());
        let core_rhs = core_op.apply(&x, Side::Rows)?;
        Ok(Self { factor_ops, factor_rhs, core_op, core_rhs })
    }
}

/// Factor matrices ordered for a Kronecker product whose row index is an
/// unfolding column (last mode slowest), skipping `skip`.
fn kron_order(factors: &[DMatrix<f64>], skip: Option<usize>) -> Vec<&DMatrix<f64>> {
    factors.iter().enumerate().rev().filter(|&(p, _)| Some(p) != skip).map(|(_, q)| q).collect()
}

/// Sketched solve of `min |A Q^T - X_(n)^T|` with
/// `A = (kron_{p != n} Q^(p)) S_(n)^T`.
fn sketched_factor(
    factors: &[DMatrix<f64>],
    core: &DenseTensor,
    n: usize,
    op: &CountSketchOp,
    rhs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let kron = KroneckerRows::new(kron_order(factors, Some(n)))?;
    let tk = count_sketch_rows(&kron, op)?;
    let ta = linalg::matmul_nt(&tk, &core.unfold(n)?);
    Ok(solve_least_squares(&ta, rhs).transpose())
}

/// Exact solve of the same problem through its normal equations:
/// `Q = Z_(n) S_(n)^T (S_(n) (kron G_p) S_(n)^T)^+` with
/// `Z = X x_{p!=n} Q^(p)^T` and `G_p = Q^(p)^T Q^(p)`.
fn exact_factor(t: &DenseTensor, factors: &[DMatrix<f64>], core: &DenseTensor, n: usize) -> Result<DMatrix<f64>> {
    let z = project_except(t, factors, n);
    let s_n = core.unfold(n)?;
    let rhs = linalg::matmul_nt(&z.unfold(n)?, &s_n);
    let grams: Vec<DMatrix<f64>> = factors.iter().map(|q| linalg::matmul_tn(q, q)).collect();
    let ops: Vec<ModeOp<'_>> = (0..core.order()).filter(|&p| p != n).map(|p| ModeOp::new(p, &grams[p])).collect();
    let normal = linalg::matmul_nt(&core.multi_mode_product(&ops)?.unfold(n)?, &s_n);
    Ok(linalg::matmul(&rhs, &linalg::pinv(&normal)))
}

/// R-LSHOOI. Each sweep updates every factor from the least-squares
/// problem `min_Q |A^(n) Q^T - X_(n)^T|`, `A^(n) = (kron_{p!=n} Q^(p))
/// S_(n)^T`, re-orthonormalizes it by QR (`Q~ = Q R`, `S <- S x_n R`), then
/// solves `min_S |(kron Q^(n)) vec(S) - vec(X)|` for the core.
///
/// With [`LsSketch::CountSketch`] both problems are sketched by count-sketches
/// with per-mode hashes (`cfg.ls_multiplier` times the Kronecker column
/// count rows), drawn
/// once so the data is sketched a single time. Kronecker rows are never
/// formed: factor problems stream them, and the core problem applies the
/// sketched Kronecker product through FFTs. The core problem is solved by CGLS warm-started from the
/// previous core, and the fit is estimated from the sketched residual.
/// With [`LsSketch::Full`] the problems are solved exactly.
///
/// Initialization is i.i.d. uniform factors and core unless `cfg.init`
/// asks for the truncated HOSVD.
pub fn r_lshooi(t: &DenseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
    cfg.checked_order(t.shape())?;
    let ranks = cfg.rank.as_slice().to_vec();
    let order = t.order();
    let root = RandomStream::new(cfg.seed);
    let mut passes = 0;

    let (mut factors, mut core) = match cfg.init.unwrap_or(HooiInit::Random) {
        HooiInit::Random => {
            let mut rng = root.substream(0x100);
            let factors: Vec<DMatrix<f64>> = (0..order)
                .map(|n| DMatrix::from_fn(t.dims()[n], ranks[n], |_, _| rng.uniform()))
                .collect();
            let core = DenseTensor::from_fn(ranks.clone(), |_| rng.uniform())?;
            (factors, core)
        }
        HooiInit::Hosvd => {
            let factors: Vec<DMatrix<f64>> =
                (0..order).map(|n| leading_vectors(t, n, ranks[n], cfg.leading)).collect();
            let core = project_all(t, &factors);
            passes += order + 1;
            (factors, core)
        }
    };

    let norm_x = t.frobenius_norm();
    let sketches = match cfg.ls_sketch {
        LsSketch::CountSketch => {
            passes += order + 1;
            Some(Sketches::new(t, &ranks, cfg.ls_multiplier, &root)?)
        }
        LsSketch::Full => None,
    };

    // One entry per sweep: the starting point is not an orthogonal projection.
    let mut fit_trace = Vec::new();
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        for n in 0..order {
            let q_tilde = match &sketches {
                Some(sk) => sketched_factor(&factors, &core, n, &sk.factor_ops[n], &sk.factor_rhs[n])?,
                None => {
                    passes += 1;
                    exact_factor(t, &factors, &core, n)?
                }
            };
            let (q, r) = linalg::thin_qr(&q_tilde);
            factors[n] = q;
            core = core.mode_product(&r, n)?;
        }
        let fit = match &sketches {
            Some(sk) => {
                let refs: Vec<&DMatrix<f64>> = factors.iter().collect();
                let tb = KroneckerSketch::new(&sk.core_op, &refs)?;
                let s0 = DMatrix::from_column_slice(core.len(), 1, core.data());
                let s = cgls(&tb, &sk.core_rhs, &s0, CGLS_TOL, CGLS_MAX_ITERS);
                let residual = DMatrix::from_vec(tb.sketch_dim(), 1, tb.apply(s.as_slice())) - &sk.core_rhs;
                core = DenseTensor::new(core.shape().clone(), s.as_slice().to_vec())?;
                1.0 - residual.norm() / sk.core_rhs.norm().max(f64::MIN_POSITIVE)
            }
            None => {
                // Orthonormal Kronecker columns: the solution is B^T vec(X).
                core = project_all(t, &factors);
                passes += 1;
                projection_fit(norm_x, core.frobenius_norm())
            }
        };
        iterations += 1;
        let prev = fit_trace.last().copied().unwrap_or(f64::NEG_INFINITY);
        fit_trace.push(fit);
        if (fit - prev).abs() < cfg.tol || (sketches.is_none() && at_fit_floor(fit)) {
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
