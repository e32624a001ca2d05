use std::collections::HashMap;

use nalgebra::DMatrix;

use super::dense::DenseTensor;
use super::kernels;
use super::shape::Shape;
use crate::error::{mismatch, Result, TuckerError};

/// Coordinate-format sparse tensor with zero-based indices.
///
/// Entries are kept sorted by linear offset with duplicates summed, so two
/// tensors built from the same multiset of entries compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    shape: Shape,
    /// `nnz * N` indices, entry `k` at `indices[k*N..(k+1)*N]`.
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseTensor {
    /// Build from `(index, value)` pairs. Duplicate indices are summed.
    pub fn from_entries<I>(dims: impl Into<Vec<usize>>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let shape = Shape::new(dims)?;
        let mut keyed = Vec::new();
        for (index, value) in entries {
            check_index(&shape, &index)?;
            keyed.push((shape.offset(&index), value));
        }
        Ok(Self::from_offsets(shape, keyed))
    }

    /// Build from `(linear offset, value)` pairs, summing duplicates.
    pub(crate) fn from_offsets(shape: Shape, mut keyed: Vec<(usize, f64)>) -> Self {
        keyed.sort_by_key(|&(off, _)| off);
        let n = shape.order();
        let mut indices = Vec::with_capacity(keyed.len() * n);
        let mut values: Vec<f64> = Vec::with_capacity(keyed.len());
        let mut last = None;
        let mut index = vec![0; n];
        for (off, v) in keyed {
            if last == Some(off) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some(off);
            shape.index_of(off, &mut index);
            indices.extend_from_slice(&index);
            values.push(v);
        }
        Self { shape, indices, values }
    }

    /// Nonzero entries of a dense tensor.
    pub fn from_dense(t: &DenseTensor) -> Self {
        let keyed = t
            .data()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(off, &v)| (off, v))
            .collect();
        Self::from_offsets(t.shape().clone(), keyed)
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

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Zero-based coordinates of the `k`-th stored entry.
    pub fn coords(&self, k: usize) -> &[usize] {
        let n = self.order();
        &self.indices[k * n..(k + 1) * n]
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        self.indices.chunks_exact(self.order()).zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> DenseTensor {
        let mut data = vec![0.0; self.shape.len()];
        for (index, v) in self.iter() {
            data[self.shape.offset(index)] += v;
        }
        DenseTensor::new(self.shape.clone(), data).expect("shape matches")
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Squared norms of every mode-`mode` fiber, indexed by unfolding column.
    pub fn fiber_norms_sq(&self, mode: usize) -> Result<Vec<f64>> {
        self.shape.check_mode(mode)?;
        let mut out = vec![0.0; self.shape.len_without(mode)];
        for (index, v) in self.iter() {
            out[self.shape.unfolding_column(mode, index)] += v * v;
        }
        Ok(out)
    }

    /// Columns `columns` of the mode-`mode` unfolding, gathered by filtering
    /// the nonzeros in a single pass.
    pub fn fibers(&self, mode: usize, columns: &[usize]) -> Result<DMatrix<f64>> {
        self.shape.check_mode(mode)?;
        let ncols = self.shape.len_without(mode);
        let mut slot: HashMap<usize, Vec<usize>> = HashMap::new();
        for (pos, &c) in columns.iter().enumerate() {
            if c >= ncols {
                return Err(mismatch(format!("fiber column {c} out of range")));
            }
            slot.entry(c).or_default().push(pos);
        }
        let mut out = DMatrix::zeros(self.shape.dim(mode), columns.len());
        for (index, v) in self.iter() {
            if let Some(targets) = slot.get(&self.shape.unfolding_column(mode, index)) {
                for &p in targets {
                    out[(index[mode], p)] += v;
                }
            }
        }
        Ok(out)
    }

    /// Dense `self x_mode op(B)`; `op(B)` is `B` (`J x I_mode`) or, with
    /// `transpose`, `B^T` for `B` of size `I_mode x J`.
    pub fn mode_product_dense(&self, b: &DMatrix<f64>, mode: usize, transpose: bool) -> Result<DenseTensor> {
        self.shape.check_mode(mode)?;
        let (j, cols) = if transpose { (b.ncols(), b.nrows()) } else { (b.nrows(), b.ncols()) };
        if cols != self.shape.dim(mode) {
            return Err(mismatch(format!(
                "mode {mode} has size {} but the matrix has {cols} columns",
                self.shape.dim(mode)
            )));
        }
        let out_shape = self.shape.with_dim(mode, j)?;
        let (left, _, _) = kernels::split(out_shape.dims(), mode);
        let mut data = vec![0.0; out_shape.len()];
        for (index, v) in self.iter() {
            let mut base = 0;
            let mut stride = 1;
            for (k, &i) in index.iter().enumerate() {
                if k != mode {
                    base += i * stride;
                }
                stride *= out_shape.dim(k);
            }
            let i = index[mode];
            for r in 0..j {
                let coef = if transpose { b[(i, r)] } else { b[(r, i)] };
                data[base + r * left] += v * coef;
            }
        }
        DenseTensor::new(out_shape, data)
    }
}

fn check_index(shape: &Shape, index: &[usize]) -> Result<()> {
    if index.len() != shape.order() {
        return Err(mismatch(format!(
            "index has {} components, tensor has order {}",
            index.len(),
            shape.order()
        )));
    }
    for (k, (&i, &d)) in index.iter().zip(shape.dims()).enumerate() {
        if i >= d {
            return Err(TuckerError::InvalidShape(format!(
                "index {i} out of bounds for mode {k} of size {d}"
            )));
        }
    }
    Ok(())
}
