//! Count-sketch: hash every index to a bucket, sign it, and sum buckets.

use nalgebra::DMatrix;

use crate::error::{mismatch, Result, TuckerError};
use crate::rng::RandomStream;
use crate::tensor::DenseTensor;

/// Which dimension of the input a sketch compresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `S X`: rows of `X` are hashed.
    Rows,
    /// `X S^T`: columns of `X` are hashed.
    Columns,
}

/// Implicit `L x J` count-sketch matrix with one signed nonzero per column.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSketchOp {
    input_dim: usize,
    sketch_dim: usize,
    hash: Vec<usize>,
    signs: Vec<f64>,
    seed: u64,
    /// Per-mode buckets and signs of a [`CountSketchOp::tensor`] sketch.
    modes: Vec<(Vec<usize>, Vec<f64>)>,
}

impl CountSketchOp {
    /// Independent uniform bucket and sign for each of `input_dim` indices.
    pub fn new(input_dim: usize, sketch_dim: usize, seed: u64) -> Result<Self> {
        check_dims(input_dim, sketch_dim)?;
        let mut rng = RandomStream::new(seed);
        let mut hash = Vec::with_capacity(input_dim);
        let mut signs = Vec::with_capacity(input_dim);
        for _ in 0..input_dim {
            hash.push(rng.below(sketch_dim));
            signs.push(rng.sign());
        }
        Ok(Self { input_dim, sketch_dim, hash, signs, seed, modes: Vec::new() })
    }

    /// Sketch for rows of a Kronecker-structured operator whose row index
    /// is a multi-index over `dims` (first entry fastest). Each mode gets
    /// its own hash and sign; an index hashes to the sum of its mode
    /// buckets modulo `sketch_dim`, with the product of its mode signs.
    pub fn tensor(dims: &[usize], sketch_dim: usize, seed: u64) -> Result<Self> {
        let input_dim = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let input_dim = input_dim.ok_or_else(|| TuckerError::InvalidShape("index space overflows".into()))?;
        check_dims(input_dim, sketch_dim)?;
        let root = RandomStream::new(seed);
        let mut hash = vec![0usize];
        let mut signs = vec![1.0];
        let mut modes = Vec::with_capacity(dims.len());
        for (k, &d) in dims.iter().enumerate() {
            let mut rng = root.substream(k as u64);
            let (h, s): (Vec<usize>, Vec<f64>) = (0..d).map(|_| (rng.below(sketch_dim), rng.sign())).unzip();
            let mut next_h = Vec::with_capacity(hash.len() * d);
            let mut next_s = Vec::with_capacity(hash.len() * d);
            for i in 0..d {
                for (&ph, &ps) in hash.iter().zip(&signs) {
                    next_h.push((ph + h[i]) % sketch_dim);
                    next_s.push(ps * s[i]);
                }
            }
            hash = next_h;
            signs = next_s;
            modes.push((h, s));
        }
        Ok(Self { input_dim, sketch_dim, hash, signs, seed, modes })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn sketch_dim(&self) -> usize {
        self.sketch_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-mode `(buckets, signs)` of a sketch built by
    /// [`CountSketchOp::tensor`]; empty otherwise.
    pub fn mode_hashes(&self) -> &[(Vec<usize>, Vec<f64>)] {
        &self.modes
    }

    pub fn bucket(&self, j: usize) -> usize {
        self.hash[j]
    }

    pub fn sign(&self, j: usize) -> f64 {
        self.signs[j]
    }

    /// The explicit `L x J` matrix, for testing.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.sketch_dim, self.input_dim);
        for j in 0..self.input_dim {
            s[(self.hash[j], j)] = self.signs[j];
        }
        s
    }

    /// `S X` (`Side::Rows`) or `X S^T` (`Side::Columns`) without forming `S`.
    pub fn apply(&self, x: &DMatrix<f64>, side: Side) -> Result<DMatrix<f64>> {
        match side {
            Side::Rows => {
                if x.nrows() != self.input_dim {
                    return Err(mismatch(format!(
                        "sketch expects {} rows, got {}",
                        self.input_dim,
                        x.nrows()
                    )));
                }
                let mut out = DMatrix::zeros(self.sketch_dim, x.ncols());
                for c in 0..x.ncols() {
                    let src = x.column(c);
                    let mut dst = out.column_mut(c);
                    for j in 0..self.input_dim {
                        dst[self.hash[j]] += self.signs[j] * src[j];
                    }
                }
                Ok(out)
            }
            Side::Columns => {
                if x.ncols() != self.input_dim {
                    return Err(mismatch(format!(
                        "sketch expects {} columns, got {}",
                        self.input_dim,
                        x.ncols()
                    )));
                }
                let mut out = DMatrix::zeros(x.nrows(), self.sketch_dim);
                for j in 0..self.input_dim {
                    let mut dst = out.column_mut(self.hash[j]);
                    dst.axpy(self.signs[j], &x.column(j), 1.0);
                }
                Ok(out)
            }
        }
    }

    /// `X_(mode) S^T` for the mode-`mode` unfolding of `t`, in one sweep
    /// over the tensor data.
    pub fn apply_unfolding(&self, t: &DenseTensor, mode: usize) -> Result<DMatrix<f64>> {
        t.shape().check_mode(mode)?;
        if t.shape().len_without(mode) != self.input_dim {
            return Err(mismatch(format!(
                "sketch expects {} unfolding columns, tensor has {}",
                self.input_dim,
                t.shape().len_without(mode)
            )));
        }
        let dims = t.dims();
        let left: usize = dims[..mode].iter().product();
        let mid = dims[mode];
        let right: usize = dims[mode + 1..].iter().product();
        let data = t.data();
        let mut out = DMatrix::zeros(mid, self.sketch_dim);
        for r in 0..right {
            for i in 0..mid {
                let base = left * (i + mid * r);
                for l in 0..left {
                    let j = l + left * r;
                    out[(i, self.hash[j])] += self.signs[j] * data[base + l];
                }
            }
        }
        Ok(out)
    }
}

fn check_dims(input_dim: usize, sketch_dim: usize) -> Result<()> {
    if input_dim == 0 || sketch_dim == 0 {
        return Err(TuckerError::InvalidParameter("count-sketch dimensions must be positive".into()));
    }
    Ok(())
}
