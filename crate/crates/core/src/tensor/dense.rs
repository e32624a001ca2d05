use nalgebra::DMatrix;

use super::kernels::{self, MatRef};
use super::shape::Shape;
use crate::error::{mismatch, Result, TuckerError};

/// Dense N-way array of `f64`, stored first mode fastest.
///
/// The element at zero-based index `(i_1, .., i_N)` lives at offset
/// `sum_k i_k * prod_{m<k} I_m`, so the mode-1 unfolding is the data itself
/// read as a column-major `I_1 x (I_2 .. I_N)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

/// One factor of a multi-mode product: `t x_mode op(matrix)`.
#[derive(Debug, Clone, Copy)]
pub struct ModeOp<'a> {
    pub mode: usize,
    pub matrix: &'a DMatrix<f64>,
    /// Multiply by `matrix^T` instead of `matrix`.
    pub transpose: bool,
}

impl<'a> ModeOp<'a> {
    pub fn new(mode: usize, matrix: &'a DMatrix<f64>) -> Self {
        Self { mode, matrix, transpose: false }
    }

    pub fn transposed(mode: usize, matrix: &'a DMatrix<f64>) -> Self {
        Self { mode, matrix, transpose: true }
    }
}

impl DenseTensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(mismatch(format!(
                "shape {shape} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_vec(dims: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Self> {
        Self::new(Shape::new(dims)?, data)
    }

    pub fn zeros(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let data = vec![0.0; shape.len()];
        Ok(Self { shape, data })
    }

    /// Build a tensor from a function of the zero-based multi-index.
    pub fn from_fn(dims: impl Into<Vec<usize>>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let mut index = vec![0; shape.order()];
        let mut data = Vec::with_capacity(shape.len());
        for off in 0..shape.len() {
            shape.index_of(off, &mut index);
            data.push(f(&index));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.shape.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.shape.offset(index);
        self.data[off] = value;
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self - other`.
    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseTensor) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(mismatch(format!("shapes {} and {} differ", self.shape, other.shape)));
        }
        Ok(())
    }

    /// Mode-`mode` unfolding, an `I_n x prod_{k!=n} I_k` matrix.
    pub fn unfold(&self, mode: usize) -> Result<DMatrix<f64>> {
        self.shape.check_mode(mode)?;
        let (left, mid, right) = kernels::split(self.dims(), mode);
        if left == 1 {
            return Ok(DMatrix::from_column_slice(mid, right, &self.data));
        }
        let cols = left * right;
        let mut out = DMatrix::zeros(mid, cols);
        for r in 0..right {
            for i in 0..mid {
                let src = &self.data[left * (i + mid * r)..left * (i + mid * r) + left];
                for (l, &v) in src.iter().enumerate() {
                    out[(i, l + left * r)] = v;
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(matrix: &DMatrix<f64>, mode: usize, shape: &Shape) -> Result<DenseTensor> {
        shape.check_mode(mode)?;
        let (left, mid, right) = kernels::split(shape.dims(), mode);
        if matrix.nrows() != mid || matrix.ncols() != left * right {
            return Err(mismatch(format!(
                "cannot fold {}x{} matrix along mode {mode} into {shape}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut data = vec![0.0; shape.len()];
        for r in 0..right {
            for i in 0..mid {
                let dst = &mut data[left * (i + mid * r)..left * (i + mid * r) + left];
                for (l, v) in dst.iter_mut().enumerate() {
                    *v = matrix[(i, l + left * r)];
                }
            }
        }
        Ok(Self { shape: shape.clone(), data })
    }

    /// `self x_mode B` for `B` of size `J x I_mode`.
    pub fn mode_product(&self, b: &DMatrix<f64>, mode: usize) -> Result<DenseTensor> {
        self.apply(ModeOp::new(mode, b))
    }

    /// `self x_mode B^T` for `B` of size `I_mode x J`.
    pub fn mode_product_t(&self, b: &DMatrix<f64>, mode: usize) -> Result<DenseTensor> {
        self.apply(ModeOp::transposed(mode, b))
    }

    fn apply(&self, op: ModeOp<'_>) -> Result<DenseTensor> {
        self.shape.check_mode(op.mode)?;
        let (rows, cols) = if op.transpose {
            (op.matrix.ncols(), op.matrix.nrows())
        } else {
            (op.matrix.nrows(), op.matrix.ncols())
        };
        if cols != self.shape.dim(op.mode) {
            return Err(mismatch(format!(
                "mode {} has size {} but the matrix has {cols} columns",
                op.mode,
                self.shape.dim(op.mode)
            )));
        }
        if rows == 0 {
            return Err(mismatch("mode product with an empty matrix".to_string()));
        }
        let data = kernels::mode_product(self.dims(), &self.data, op.matrix, op.transpose, op.mode);
        Ok(Self { shape: self.shape.with_dim(op.mode, rows)?, data })
    }

    /// Sequential mode products over distinct modes.
    pub fn multi_mode_product(&self, ops: &[ModeOp<'_>]) -> Result<DenseTensor> {
        let mut seen = vec![false; self.order()];
        for op in ops {
            self.shape.check_mode(op.mode)?;
            if std::mem::replace(&mut seen[op.mode], true) {
                return Err(TuckerError::DuplicateMode(op.mode));
            }
        }
        let mut iter = ops.iter();
        let mut out = match iter.next() {
            Some(op) => self.apply(*op)?,
            None => return Ok(self.clone()),
        };
        for op in iter {
            out = out.apply(*op)?;
        }
        Ok(out)
    }

    /// `X_(mode) * m` without forming the unfolding.
    pub fn unfold_mul(&self, mode: usize, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.shape.check_mode(mode)?;
        if m.nrows() != self.shape.len_without(mode) {
            return Err(mismatch(format!(
                "unfolding has {} columns, matrix has {} rows",
                self.shape.len_without(mode),
                m.nrows()
            )));
        }
        Ok(kernels::unfold_mul(self.dims(), &self.data, MatRef::of(m), mode))
    }

    /// `X_(mode)^T * m` without forming the unfolding.
    pub fn unfold_t_mul(&self, mode: usize, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.shape.check_mode(mode)?;
        if m.nrows() != self.shape.dim(mode) {
            return Err(mismatch(format!(
                "mode {mode} has size {}, matrix has {} rows",
                self.shape.dim(mode),
                m.nrows()
            )));
        }
        Ok(kernels::unfold_t_mul(self.dims(), &self.data, MatRef::of(m), mode))
    }

    /// `X_(mode) X_(mode)^T`.
    pub fn gram(&self, mode: usize) -> Result<DMatrix<f64>> {
        self.shape.check_mode(mode)?;
        Ok(kernels::gram(self.dims(), &self.data, mode))
    }

    /// Column `column` of the mode-`mode` unfolding (a mode-`mode` fiber),
    /// gathered by stride arithmetic.
    pub fn fiber(&self, mode: usize, column: usize) -> Result<Vec<f64>> {
        self.shape.check_mode(mode)?;
        let (left, mid, right) = kernels::split(self.dims(), mode);
        if column >= left * right {
            return Err(mismatch(format!("fiber column {column} out of range")));
        }
        let (l, r) = (column % left, column / left);
        Ok((0..mid).map(|i| self.data[l + left * (i + mid * r)]).collect())
    }

    /// Squared norms of every mode-`mode` fiber, indexed by unfolding column.
    pub fn fiber_norms_sq(&self, mode: usize) -> Result<Vec<f64>> {
        self.shape.check_mode(mode)?;
        let (left, mid, right) = kernels::split(self.dims(), mode);
        let mut out = vec![0.0; left * right];
        for r in 0..right {
            for i in 0..mid {
                let base = left * (i + mid * r);
                for l in 0..left {
                    let v = self.data[base + l];
                    out[l + left * r] += v * v;
                }
            }
        }
        Ok(out)
    }
}
