//! Reproducible random streams.
//!
//! Every kernel draws from a [`RandomStream`], a ChaCha8 generator keyed by a
//! 64-bit seed and a 64-bit stream id. ChaCha is counter based, so streams
//! with different ids are independent and a stream's output does not depend
//! on what other streams consumed. N-mode algorithms derive one stream per
//! mode with [`RandomStream::substream`], which makes their output
//! independent of the order modes are visited in.
//!
//! Gaussian variates use the Box-Muller transform (both outputs are used).
//! Uniform variates are 53-bit mantissa draws on [0, 1).

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Entry distribution of random test matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distribution {
    #[default]
    Gaussian,
    /// Rademacher entries, +1 or -1 with equal probability.
    UniformPm1,
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            seed,
            stream,
            rng,
            spare: None,
        }
    }

    /// Derive an independent child stream. The child depends only on this
    /// stream's (seed, stream id) pair and `tag`, never on consumed state.
    pub fn substream(&self, tag: u64) -> Self {
        let id = splitmix64(self.stream ^ splitmix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        Self::with_stream(self.seed, id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn sign(&mut self) -> f64 {
        if self.rng.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (sin, cos) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(radius * sin);
        radius * cos
    }

    pub fn sample(&mut self, dist: Distribution) -> f64 {
        match dist {
            Distribution::Gaussian => self.gaussian(),
            Distribution::UniformPm1 => self.sign(),
        }
    }

    /// Random matrix filled column by column.
    pub fn matrix(&mut self, rows: usize, cols: usize, dist: Distribution) -> DMatrix<f64> {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.sample(dist)).collect();
        DMatrix::from_vec(rows, cols, data)
    }

    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        self.matrix(rows, cols, Distribution::Gaussian)
    }

    pub fn gaussian_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.gaussian()).collect()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
