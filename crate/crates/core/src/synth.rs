//! Synthetic test tensors.

use nalgebra::DMatrix;

use crate::error::{Result, TuckerError};
use crate::rng::RandomStream;
use crate::tensor::{DenseTensor, MultilinearRank, Shape, SparseTensor, TuckerModel};

/// `[[S; Q^(1), .., Q^(N)]]` with i.i.d. standard Gaussian core and factors.
/// Its multilinear rank equals `rank` almost surely.
pub fn gen_low_rank(dims: &[usize], rank: &MultilinearRank, seed: u64) -> Result<DenseTensor> {
    let shape = Shape::new(dims.to_vec())?;
    rank.check(&shape)?;
    let root = RandomStream::new(seed);
    let mut rng = root.substream(0);
    let core = DenseTensor::new(Shape::new(rank.as_slice().to_vec())?, rng.gaussian_vec(rank.as_slice().iter().product()))?;
    let factors: Vec<DMatrix<f64>> = dims
        .iter()
        .zip(rank.as_slice())
        .enumerate()
        .map(|(n, (&d, &r))| root.substream(1 + n as u64).gaussian_matrix(d, r))
        .collect();
    Ok(TuckerModel::with_flags(core, factors, vec![false; dims.len()])?.reconstruct())
}

/// Adds Gaussian noise `gamma N` with `gamma = |X|_F / (|N|_F 10^(snr/20))`,
/// so the realized SNR equals the request. Returns the noisy tensor and the
/// realized SNR in dB. An infinite SNR leaves the tensor unchanged.
pub fn add_noise(t: &DenseTensor, snr_db: f64, seed: u64) -> Result<(DenseTensor, f64)> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(TuckerError::InvalidParameter(format!("invalid SNR {snr_db}")));
    }
    let norm = t.frobenius_norm();
    if norm == 0.0 {
        return Err(TuckerError::ZeroTensor);
    }
    if snr_db == f64::INFINITY {
        return Ok((t.clone(), f64::INFINITY));
    }
    let mut rng = RandomStream::new(seed);
    let noise = DenseTensor::new(t.shape().clone(), rng.gaussian_vec(t.len()))?;
    let gamma = norm / (noise.frobenius_norm() * 10f64.powf(snr_db / 20.0));
    let mut noisy = t.clone();
    noisy.axpy(gamma, &noise)?;
    let realized = 20.0 * (norm / (gamma * noise.frobenius_norm())).log10();
    Ok((noisy, realized))
}

/// `x(i_1, .., i_N) = (i_1^5 + .. + i_N^5)^(-1/5)` with 1-based indices.
/// Has rapidly decaying multilinear singular values.
pub fn gen_function(dims: &[usize]) -> Result<DenseTensor> {
    DenseTensor::from_fn(dims.to_vec(), |idx| {
        let s: f64 = idx.iter().map(|&i| ((i + 1) as f64).powi(5)).sum();
        s.powf(-0.2)
    })
}

/// Hilbert tensor `x(i_1, .., i_N) = 1 / (i_1 + .. + i_N - N + 1)` with
/// 1-based indices.
pub fn gen_hilbert(dims: &[usize]) -> Result<DenseTensor> {
    DenseTensor::from_fn(dims.to_vec(), |idx| 1.0 / (idx.iter().sum::<usize>() + 1) as f64)
}

/// Number of rank-one terms in [`gen_sparse_cp`].
pub const SPARSE_CP_TERMS: usize = 200;
/// Number of leading terms scaled by `gamma` in [`gen_sparse_cp`].
pub const SPARSE_CP_STRONG: usize = 10;

/// Sparse sum of rank-one terms
/// `sum_{i<=10} (gamma/i^2) x_i o y_i o .. + sum_{10<i<=200} (1/i^2) x_i o y_i o ..`
/// whose component vectors have Gaussian entries, each nonzero with
/// probability `sparsity`. Only nonzero index tuples are ever visited.
pub fn gen_sparse_cp(dims: &[usize], gamma: f64, sparsity: f64, seed: u64) -> Result<SparseTensor> {
    if !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(TuckerError::InvalidParameter(format!("sparsity {sparsity} not in (0, 1]")));
    }
    let shape = Shape::new(dims.to_vec())?;
    let root = RandomStream::new(seed);
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for term in 0..SPARSE_CP_TERMS {
        let i = (term + 1) as f64;
        let weight = if term < SPARSE_CP_STRONG { gamma } else { 1.0 } / (i * i);
        let mut rng = root.substream(term as u64);
        let vectors: Vec<Vec<(usize, f64)>> = dims.iter().map(|&d| sparse_vector(d, sparsity, &mut rng)).collect();
        accumulate(&shape, &vectors, weight, &mut entries);
    }
    Ok(SparseTensor::from_offsets(shape, entries))
}

/// Entries of a length-`len` vector that are nonzero with probability `p`.
pub(crate) fn sparse_vector(len: usize, p: f64, rng: &mut RandomStream) -> Vec<(usize, f64)> {
    (0..len)
        .filter_map(|k| if p >= 1.0 || rng.uniform() < p { Some((k, rng.gaussian())) } else { None })
        .collect()
}

/// Appends the outer product of sparse vectors (one per mode) as offset/value pairs.
fn accumulate(shape: &Shape, vectors: &[Vec<(usize, f64)>], weight: f64, out: &mut Vec<(usize, f64)>) {
    if vectors.iter().any(|v| v.is_empty()) {
        return;
    }
    let strides: Vec<usize> = (0..shape.order()).map(|n| shape.dims()[..n].iter().product()).collect();
    let mut pos = vec![0usize; vectors.len()];
    loop {
        let mut offset = 0;
        let mut value = weight;
        for (n, v) in vectors.iter().enumerate() {
            let (k, x) = v[pos[n]];
            offset += k * strides[n];
            value *= x;
        }
        out.push((offset, value));
        let mut n = 0;
        loop {
            if n == vectors.len() {
                return;
            }
            pos[n] += 1;
            if pos[n] < vectors[n].len() {
                break;
            }
            pos[n] = 0;
            n += 1;
        }
    }
}
