//! Column sampling for low-rank approximation.

use nalgebra::DMatrix;

use super::config::QbFactors;
use crate::error::{Result, TuckerError};
use crate::rng::RandomStream;
use crate::tensor::linalg;

/// Column sampling distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingDistribution {
    #[default]
    Uniform,
    /// `p_j = |x_j|^2 / |X|_F^2`.
    LengthSquared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    /// Number of columns to draw.
    pub count: usize,
    pub distribution: SamplingDistribution,
    pub replacement: bool,
    pub seed: u64,
}

impl SampleConfig {
    pub fn new(count: usize) -> Self {
        Self { count, distribution: SamplingDistribution::Uniform, replacement: false, seed: 0 }
    }

    pub fn distribution(mut self, d: SamplingDistribution) -> Self {
        self.distribution = d;
        self
    }

    pub fn replacement(mut self, yes: bool) -> Self {
        self.replacement = yes;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Sampling probabilities from squared column norms.
///
/// Length-squared sampling needs at least `count` nonzero columns.
pub fn probabilities(dist: SamplingDistribution, col_norms_sq: &[f64], count: usize) -> Result<Vec<f64>> {
    let j = col_norms_sq.len();
    if j == 0 {
        return Err(TuckerError::InvalidParameter("no columns to sample".into()));
    }
    match dist {
        SamplingDistribution::Uniform => Ok(vec![1.0 / j as f64; j]),
        SamplingDistribution::LengthSquared => {
            let nonzero = col_norms_sq.iter().filter(|&&v| v > 0.0).count();
            if nonzero < count {
                return Err(TuckerError::InsufficientSupport { needed: count, found: nonzero });
            }
            let total: f64 = col_norms_sq.iter().sum();
            Ok(col_norms_sq.iter().map(|v| v / total).collect())
        }
    }
}

/// Draw `count` indices from `probs`.
///
/// Without replacement, draws are sequential: each draw picks from the
/// remaining indices with renormalized weights. Inverse-CDF search resolves
/// ties toward the lower index.
pub fn draw(probs: &[f64], count: usize, replacement: bool, rng: &mut RandomStream) -> Result<Vec<usize>> {
    let support = probs.iter().filter(|&&p| p > 0.0).count();
    if !replacement && count > support {
        return Err(TuckerError::InsufficientSupport { needed: count, found: support });
    }
    if replacement {
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in probs {
            acc += p;
            cdf.push(acc);
        }
        let total = acc;
        return Ok((0..count)
            .map(|_| {
                let u = rng.uniform() * total;
                cdf.partition_point(|&c| c <= u).min(probs.len() - 1)
            })
            .map(|i| last_positive(probs, i))
            .collect());
    }
    let mut weights = probs.to_vec();
    let mut remaining: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.uniform() * remaining;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if target < acc {
                break;
            }
        }
        let i = pick.expect("positive weight remains");
        remaining -= weights[i];
        weights[i] = 0.0;
        // Guard the running total against cancellation.
        if remaining <= 0.0 {
            remaining = weights.iter().sum();
        }
        out.push(i);
    }
    Ok(out)
}

/// Step back from a zero-probability index that a rounding-level `u`
/// landed on.
fn last_positive(probs: &[f64], mut i: usize) -> usize {
    while probs[i] <= 0.0 && i > 0 {
        i -= 1;
    }
    i
}

/// Column-sampled QB approximation.
#[derive(Debug, Clone)]
pub struct ColumnSample {
    pub indices: Vec<usize>,
    /// Sampled columns; scaled by `1/sqrt(count p_j)` when drawn with replacement.
    pub columns: DMatrix<f64>,
    pub factors: QbFactors,
}

/// Sample columns of `x`, orthonormalize them and project: `B = Q^T X`.
pub fn column_sample_qb(x: &DMatrix<f64>, cfg: &SampleConfig) -> Result<ColumnSample> {
    if cfg.count == 0 {
        return Err(TuckerError::InvalidParameter("sample count must be positive".into()));
    }
    if cfg.count > x.ncols() {
        return Err(TuckerError::RankTooLarge { rank: cfg.count, dim: x.ncols() });
    }
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    let probs = probabilities(cfg.distribution, &norms, cfg.count)?;
    let mut rng = RandomStream::new(cfg.seed);
    let indices = draw(&probs, cfg.count, cfg.replacement, &mut rng)?;
    let mut columns = linalg::select_columns(x, &indices);
    if cfg.replacement {
        for (c, &j) in indices.iter().enumerate() {
            columns.column_mut(c).scale_mut(1.0 / (cfg.count as f64 * probs[j]).sqrt());
        }
    }
    let q = linalg::orthonormalize(&columns);
    let b = linalg::matmul_tn(&q, x);
    Ok(ColumnSample { indices, columns, factors: QbFactors { q, b } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_squared_probabilities() {
        let x = DMatrix::from_column_slice(2, 3, &[3.0, 4.0, 0.0, 0.0, 1.0, 0.0]);
        let norms: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
        let p = probabilities(SamplingDistribution::LengthSquared, &norms, 2).unwrap();
        assert_eq!(p, vec![25.0 / 26.0, 0.0, 1.0 / 26.0]);
        assert!(matches!(
            probabilities(SamplingDistribution::LengthSquared, &norms, 3),
            Err(TuckerError::InsufficientSupport { needed: 3, found: 2 })
        ));
    }

    #[test]
    fn without_replacement_is_distinct_and_skips_zeros() {
        let probs = [0.0, 0.5, 0.0, 0.25, 0.25];
        let mut rng = RandomStream::new(8);
        for _ in 0..50 {
            let mut idx = draw(&probs, 3, false, &mut rng).unwrap();
            idx.sort();
            assert_eq!(idx, vec![1, 3, 4]);
        }
        assert!(draw(&probs, 4, false, &mut rng).is_err());
    }

    #[test]
    fn with_replacement_frequencies() {
        let probs = [0.1, 0.0, 0.6, 0.3];
        let mut rng = RandomStream::new(2);
        let draws = draw(&probs, 20000, true, &mut rng).unwrap();
        let mut counts = [0usize; 4];
        for i in draws {
            counts[i] += 1;
        }
        assert_eq!(counts[1], 0);
        for (c, p) in counts.iter().zip(probs) {
            assert!((*c as f64 / 20000.0 - p).abs() < 0.015);
        }
    }

    #[test]
    fn distinct_support_gives_exact_qb() {
        // Exactly three nonzero, independent columns.
        let mut x = DMatrix::zeros(6, 10);
        let mut rng = RandomStream::new(1);
        for j in [1usize, 4, 7] {
            let col = rng.gaussian_matrix(6, 1);
            x.column_mut(j).copy_from(&col.column(0));
        }
        let cfg = SampleConfig::new(3).distribution(SamplingDistribution::LengthSquared).seed(4);
        let s = column_sample_qb(&x, &cfg).unwrap();
        let mut idx = s.indices.clone();
        idx.sort();
        assert_eq!(idx, vec![1, 4, 7]);
        assert!((&x - s.factors.to_matrix()).norm() < 1e-12);
    }

    #[test]
    fn replacement_scaling() {
        let x = RandomStream::new(3).gaussian_matrix(4, 6);
        let cfg = SampleConfig::new(2).replacement(true).seed(1);
        let s = column_sample_qb(&x, &cfg).unwrap();
        for (c, &j) in s.indices.iter().enumerate() {
            let scale = 1.0 / (2.0 * (1.0 / 6.0f64)).sqrt();
            assert!((s.columns.column(c) - x.column(j) * scale).norm() < 1e-14);
        }
    }
}
