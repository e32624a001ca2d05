use nalgebra::DMatrix;

use crate::tensor::linalg;
use crate::tensor::DenseTensor;

/// A matrix accessed only through products with dense blocks.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `X * m`.
    fn mul(&self, m: &DMatrix<f64>) -> DMatrix<f64>;
    /// `X^T * m`.
    fn mul_t(&self, m: &DMatrix<f64>) -> DMatrix<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::matmul(self, m)
    }

    fn mul_t(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::matmul_tn(self, m)
    }
}

/// The mode-`mode` unfolding of a dense tensor, never materialized.
#[derive(Clone, Copy)]
pub struct Unfolding<'a> {
    tensor: &'a DenseTensor,
    mode: usize,
}

impl<'a> Unfolding<'a> {
    /// Panics if `mode` is out of range.
    pub fn new(tensor: &'a DenseTensor, mode: usize) -> Self {
        assert!(mode < tensor.order(), "mode {mode} out of range");
        Self { tensor, mode }
    }
}

impl LinearOperator for Unfolding<'_> {
    fn nrows(&self) -> usize {
        self.tensor.dims()[self.mode]
    }

    fn ncols(&self) -> usize {
        self.tensor.shape().len_without(self.mode)
    }

    fn mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.tensor.unfold_mul(self.mode, m).expect("conforming product")
    }

    fn mul_t(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.tensor.unfold_t_mul(self.mode, m).expect("conforming product")
    }
}
