use nalgebra::DMatrix;

use super::dense::{DenseTensor, ModeOp};
use super::linalg;
use super::shape::Shape;
use crate::error::{mismatch, Result, TuckerError};

/// Target multilinear rank `(R_1, .., R_N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilinearRank(Vec<usize>);

impl MultilinearRank {
    pub fn new(ranks: impl Into<Vec<usize>>) -> Result<Self> {
        let ranks = ranks.into();
        if ranks.is_empty() {
            return Err(TuckerError::InvalidShape("rank list is empty".into()));
        }
        if ranks.contains(&0) {
            return Err(TuckerError::InvalidParameter("ranks must be positive".into()));
        }
        Ok(Self(ranks))
    }

    /// The same rank in every one of `order` modes.
    pub fn uniform(rank: usize, order: usize) -> Result<Self> {
        Self::new(vec![rank; order])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, mode: usize) -> usize {
        self.0[mode]
    }

    /// Check that the rank fits inside `shape`.
    pub fn check(&self, shape: &Shape) -> Result<()> {
        if self.order() != shape.order() {
            return Err(mismatch(format!(
                "rank has {} entries, tensor has order {}",
                self.order(),
                shape.order()
            )));
        }
        for (&r, &d) in self.0.iter().zip(shape.dims()) {
            if r > d {
                return Err(TuckerError::RankTooLarge { rank: r, dim: d });
            }
        }
        Ok(())
    }
}

impl From<MultilinearRank> for Vec<usize> {
    fn from(r: MultilinearRank) -> Self {
        r.0
    }
}

/// Tucker model `S x_1 Q^(1) .. x_N Q^(N)`.
#[derive(Debug, Clone)]
pub struct TuckerModel {
    core: DenseTensor,
    factors: Vec<DMatrix<f64>>,
    orthonormal: Vec<bool>,
}

/// Tolerance on `|Q^T Q - I|` used to set the orthonormality flags.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

impl TuckerModel {
    /// Build a model; orthonormality flags are measured from the factors.
    pub fn new(core: DenseTensor, factors: Vec<DMatrix<f64>>) -> Result<Self> {
        let orthonormal = factors.iter().map(|q| linalg::is_orthonormal(q, ORTHONORMAL_TOL)).collect();
        Self::with_flags(core, factors, orthonormal)
    }

    /// Build a model with explicit orthonormality flags.
    pub fn with_flags(core: DenseTensor, factors: Vec<DMatrix<f64>>, orthonormal: Vec<bool>) -> Result<Self> {
        if factors.len() != core.order() || orthonormal.len() != core.order() {
            return Err(mismatch(format!(
                "core has order {} but {} factors were given",
                core.order(),
                factors.len()
            )));
        }
        for (n, q) in factors.iter().enumerate() {
            if q.ncols() != core.dims()[n] {
                return Err(mismatch(format!(
                    "factor {n} has {} columns, core mode {n} has size {}",
                    q.ncols(),
                    core.dims()[n]
                )));
            }
            if q.nrows() == 0 {
                return Err(mismatch(format!("factor {n} has no rows")));
            }
        }
        Ok(Self { core, factors, orthonormal })
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &DMatrix<f64> {
        &self.factors[mode]
    }

    pub fn orthonormal_flags(&self) -> &[bool] {
        &self.orthonormal
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal.iter().all(|&f| f)
    }

    pub fn into_parts(self) -> (DenseTensor, Vec<DMatrix<f64>>) {
        (self.core, self.factors)
    }

    pub fn order(&self) -> usize {
        self.core.order()
    }

    /// Mode sizes of the reconstructed tensor.
    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|q| q.nrows()).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.dims().to_vec()
    }

    /// Number of stored values, `prod R_n + sum I_n R_n`.
    pub fn storage_len(&self) -> usize {
        self.core.len() + self.factors.iter().map(|q| q.len()).sum::<usize>()
    }

    /// `S x_1 Q^(1) .. x_N Q^(N)`.
    pub fn reconstruct(&self) -> DenseTensor {
        // Grow the mode with the smallest expansion first.
        let mut modes: Vec<usize> = (0..self.order()).collect();
        modes.sort_by(|&a, &b| {
            let ra = self.factors[a].nrows() as f64 / self.factors[a].ncols() as f64;
            let rb = self.factors[b].nrows() as f64 / self.factors[b].ncols() as f64;
            ra.total_cmp(&rb)
        });
        let ops: Vec<ModeOp<'_>> = modes.iter().map(|&n| ModeOp::new(n, &self.factors[n])).collect();
        self.core.multi_mode_product(&ops).expect("model is conforming")
    }
}
