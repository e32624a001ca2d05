//! Shared fixtures for the criterion benchmarks.

use tucker_core::{synth, DenseTensor, MultilinearRank};

/// Exact multilinear-rank tensor with `dims` and uniform rank `rank`.
pub fn low_rank_cube(dim: usize, rank: usize, seed: u64) -> DenseTensor {
    let r = MultilinearRank::uniform(rank, 3).expect("positive rank");
    synth::gen_low_rank(&[dim, dim, dim], &r, seed).expect("rank within dims")
}

/// Low-rank cube with additive Gaussian noise at `snr_db`.
pub fn noisy_cube(dim: usize, rank: usize, snr_db: f64, seed: u64) -> DenseTensor {
    synth::add_noise(&low_rank_cube(dim, rank, seed), snr_db, seed + 1).expect("nonzero tensor").0
}
