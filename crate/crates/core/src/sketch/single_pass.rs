//! Sketch-and-solve low-rank approximations that read the input once.
//!
//! The range sketch `Y = X Omega` and a co-range sketch `W = Psi X` are
//! accumulated during a single sweep over column blocks; `B` is then
//! recovered by least squares, `B = (Psi Q)^+ W`. The co-range sketch uses
//! `2k + 1` rows for `k = R + p` range columns (capped by the row count), so
//! `Psi Q` is overdetermined instead of square. Power iterations would need
//! further passes and are ignored here.

use std::cell::Cell;

use nalgebra::{DMatrix, DMatrixView};

use super::config::{QbFactors, SketchConfig, TwoSidedFactors};
use crate::error::{Result, TuckerError};
use crate::rng::RandomStream;
use crate::tensor::linalg;

/// Condition number above which a recovered factor is flagged.
pub const CONDITION_WARNING: f64 = 1e12;

/// Column-block access to a matrix that may be expensive to read.
pub trait MatrixSource {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Visit every column exactly once, in blocks, left to right; `f`
    /// receives the first column index of each block.
    fn stream(&self, f: &mut dyn FnMut(usize, DMatrixView<'_, f64>));
}

const BLOCK: usize = 64;

impl MatrixSource for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn stream(&self, f: &mut dyn FnMut(usize, DMatrixView<'_, f64>)) {
        let mut start = 0;
        while start < self.ncols() {
            let w = BLOCK.min(self.ncols() - start);
            f(start, self.columns(start, w));
            start += w;
        }
    }
}

/// A matrix that counts how many times it has been streamed.
#[derive(Debug, Clone)]
pub struct CountingMatrix {
    matrix: DMatrix<f64>,
    passes: Cell<usize>,
}

impl CountingMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix, passes: Cell::new(0) }
    }

    pub fn passes(&self) -> usize {
        self.passes.get()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl MatrixSource for CountingMatrix {
    fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    fn stream(&self, f: &mut dyn FnMut(usize, DMatrixView<'_, f64>)) {
        self.passes.set(self.passes.get() + 1);
        self.matrix.stream(f);
    }
}

/// Factors plus quality warnings raised while computing them.
#[derive(Debug, Clone)]
pub struct Sketched<F> {
    pub factors: F,
    pub warnings: Vec<String>,
}

fn core_sketch_size(k: usize, dim: usize) -> usize {
    (2 * k + 1).min(dim)
}

/// `(M)^+` with a warning when `M` is ill-conditioned.
fn checked_pinv(m: &DMatrix<f64>, what: &str, warnings: &mut Vec<String>) -> DMatrix<f64> {
    let inv_cond = linalg::inverse_condition(m);
    if inv_cond * CONDITION_WARNING < 1.0 {
        let msg = format!("{what} is ill-conditioned (condition {:.3e})", 1.0 / inv_cond);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    linalg::pinv(m)
}

/// Single-pass QB approximation.
pub fn single_pass_qb<S: MatrixSource + ?Sized>(x: &S, cfg: &SketchConfig) -> Result<Sketched<QbFactors>> {
    cfg.check(x.nrows(), x.ncols())?;
    let (rows, cols) = (x.nrows(), x.ncols());
    let k = cfg.sketch_size();
    let l = core_sketch_size(k, rows);
    let root = RandomStream::new(cfg.seed);
    let omega = root.substream(1).matrix(cols, k, cfg.distribution);
    let psi = root.substream(2).matrix(l, rows, cfg.distribution);

    let mut y = DMatrix::zeros(rows, k);
    let mut w = DMatrix::zeros(l, cols);
    x.stream(&mut |start, block| {
        let width = block.ncols();
        y += block * omega.rows(start, width);
        w.columns_mut(start, width).copy_from(&(&psi * block));
    });

    let q = linalg::orthonormalize(&y);
    let mut warnings = Vec::new();
    let b = checked_pinv(&linalg::matmul(&psi, &q), "co-range sketch of Q", &mut warnings) * w;
    Ok(Sketched { factors: QbFactors { q, b }, warnings })
}

/// Single-pass two-sided approximation `X ~ Q1 B Q2^T`.
pub fn single_pass_two_sided<S: MatrixSource + ?Sized>(
    x: &S,
    cfg: &SketchConfig,
) -> Result<Sketched<TwoSidedFactors>> {
    cfg.check(x.nrows(), x.ncols())?;
    let (rows, cols) = (x.nrows(), x.ncols());
    let k = cfg.sketch_size();
    let (l1, l2) = (core_sketch_size(k, rows), core_sketch_size(k, cols));
    let root = RandomStream::new(cfg.seed);
    let omega1 = root.substream(1).matrix(cols, k, cfg.distribution);
    let omega2 = root.substream(2).matrix(rows, k, cfg.distribution);
    let psi = root.substream(3).matrix(l1, rows, cfg.distribution);
    let phi = root.substream(4).matrix(cols, l2, cfg.distribution);

    let mut y1 = DMatrix::zeros(rows, k);
    let mut y2 = DMatrix::zeros(cols, k);
    let mut w = DMatrix::zeros(l1, l2);
    x.stream(&mut |start, block| {
        let width = block.ncols();
        y1 += block * omega1.rows(start, width);
        y2.rows_mut(start, width).copy_from(&(block.transpose() * &omega2));
        w += (&psi * block) * phi.rows(start, width);
    });

    let q1 = linalg::orthonormalize(&y1);
    let q2 = linalg::orthonormalize(&y2);
    let mut warnings = Vec::new();
    let left = checked_pinv(&linalg::matmul(&psi, &q1), "row-side core sketch", &mut warnings);
    let right = checked_pinv(&linalg::matmul_tn(&q2, &phi), "column-side core sketch", &mut warnings);
    let b = left * w * right;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(TuckerError::InvalidParameter("single-pass core is not finite".into()));
    }
    Ok(Sketched { factors: TwoSidedFactors { q1, b, q2 }, warnings })
}
