use nalgebra::DMatrix;

use crate::error::{Result, TuckerError};
use crate::rng::Distribution;
use crate::tensor::linalg;

/// Parameters of the randomized range finders.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchConfig {
    pub rank: usize,
    /// Extra sketch columns `p`.
    pub oversampling: usize,
    /// Power iterations `q`.
    pub power_iterations: usize,
    pub distribution: Distribution,
    pub seed: u64,
}

impl SketchConfig {
    pub const DEFAULT_OVERSAMPLING: usize = 10;
    pub const DEFAULT_POWER_ITERATIONS: usize = 2;

    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            oversampling: Self::DEFAULT_OVERSAMPLING,
            power_iterations: Self::DEFAULT_POWER_ITERATIONS,
            distribution: Distribution::Gaussian,
            seed: 0,
        }
    }

    pub fn oversampling(mut self, p: usize) -> Self {
        self.oversampling = p;
        self
    }

    pub fn power_iterations(mut self, q: usize) -> Self {
        self.power_iterations = q;
        self
    }

    pub fn distribution(mut self, d: Distribution) -> Self {
        self.distribution = d;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Number of sketch columns, `R + p`.
    pub fn sketch_size(&self) -> usize {
        self.rank + self.oversampling
    }

    /// Check `R >= 1` and `R + p <= min(rows, cols)`.
    pub(crate) fn check(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rank == 0 {
            return Err(TuckerError::InvalidParameter("target rank must be positive".into()));
        }
        let limit = rows.min(cols);
        if self.sketch_size() > limit {
            return Err(TuckerError::RankTooLarge { rank: self.sketch_size(), dim: limit });
        }
        Ok(())
    }
}

/// `X ~ Q B` with orthonormal `Q`.
#[derive(Debug, Clone)]
pub struct QbFactors {
    pub q: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

/// `X ~ Q1 B Q2^T` with orthonormal `Q1`, `Q2`.
#[derive(Debug, Clone)]
pub struct TwoSidedFactors {
    pub q1: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q2: DMatrix<f64>,
}

/// `X ~ U diag(s) V^T`, `s` non-negative and non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl QbFactors {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        linalg::matmul(&self.q, &self.b)
    }
}

impl TwoSidedFactors {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        linalg::matmul_nt(&linalg::matmul(&self.q1, &self.b), &self.q2)
    }
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        linalg::matmul_nt(&us, &self.v)
    }
}

/// Matrix-level low-rank results.
#[derive(Debug, Clone)]
pub enum LowRankFactors {
    Qb(QbFactors),
    TwoSided(TwoSidedFactors),
    Svd(SvdFactors),
}

impl LowRankFactors {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            Self::Qb(f) => f.to_matrix(),
            Self::TwoSided(f) => f.to_matrix(),
            Self::Svd(f) => f.to_matrix(),
        }
    }

    /// `|X - approx|_F / |X|_F`, or the absolute error when `X` is zero.
    pub fn relative_error(&self, x: &DMatrix<f64>) -> f64 {
        let err = (x - self.to_matrix()).norm();
        let nx = x.norm();
        if nx > 0.0 {
            err / nx
        } else {
            err
        }
    }
}

impl From<QbFactors> for LowRankFactors {
    fn from(f: QbFactors) -> Self {
        Self::Qb(f)
    }
}

impl From<TwoSidedFactors> for LowRankFactors {
    fn from(f: TwoSidedFactors) -> Self {
        Self::TwoSided(f)
    }
}

impl From<SvdFactors> for LowRankFactors {
    fn from(f: SvdFactors) -> Self {
        Self::Svd(f)
    }
}
