//! Tucker decompositions: deterministic HOSVD/STHOSVD/HOOI and their
//! randomized counterparts.

mod common;
mod config;
mod hooi;
mod hosvd;
mod lshooi;
mod pass_efficient;
mod randomized;
mod residual;
mod sampling;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use config::{Decomposition, HooiInit, LeadingVectors, LsSketch, TuckerConfig};
pub use hooi::{hooi, rp_hooi};
pub use hosvd::{sthosvd, thosvd};
pub use lshooi::r_lshooi;
pub use pass_efficient::{pet_sizes, r_pet, CountingTensor, TensorSource};
pub use randomized::{r_sthosvd, rp_hosvd};
pub use residual::mlrank_residual;
pub use sampling::{r_hoid, r_st, r_st_sparse};

use crate::error::{Result, TuckerError};
use crate::metrics;
use crate::tensor::DenseTensor;

/// The Tucker algorithms, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Thosvd,
    Sthosvd,
    Hooi,
    RpHosvd,
    RpHooi,
    RSthosvd,
    RPet,
    RSt,
    RHoid,
    RLshooi,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Thosvd,
        Algorithm::Sthosvd,
        Algorithm::Hooi,
        Algorithm::RpHosvd,
        Algorithm::RpHooi,
        Algorithm::RSthosvd,
        Algorithm::RPet,
        Algorithm::RSt,
        Algorithm::RHoid,
        Algorithm::RLshooi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Thosvd => "thosvd",
            Algorithm::Sthosvd => "sthosvd",
            Algorithm::Hooi => "hooi",
            Algorithm::RpHosvd => "rp-hosvd",
            Algorithm::RpHooi => "rp-hooi",
            Algorithm::RSthosvd => "r-sthosvd",
            Algorithm::RPet => "r-pet",
            Algorithm::RSt => "r-st",
            Algorithm::RHoid => "r-hoid",
            Algorithm::RLshooi => "r-lshooi",
        }
    }

    pub fn is_randomized(self) -> bool {
        !matches!(self, Algorithm::Thosvd | Algorithm::Sthosvd | Algorithm::Hooi)
    }

    /// Deterministic algorithm computing the same kind of approximation.
    pub fn counterpart(self) -> Algorithm {
        match self {
            Algorithm::RpHooi | Algorithm::RLshooi | Algorithm::Hooi => Algorithm::Hooi,
            Algorithm::RSthosvd | Algorithm::Sthosvd => Algorithm::Sthosvd,
            _ => Algorithm::Thosvd,
        }
    }

    pub fn run(self, t: &DenseTensor, cfg: &TuckerConfig) -> Result<Decomposition> {
        match self {
            Algorithm::Thosvd => thosvd(t, cfg),
            Algorithm::Sthosvd => sthosvd(t, cfg),
            Algorithm::Hooi => hooi(t, cfg),
            Algorithm::RpHosvd => rp_hosvd(t, cfg),
            Algorithm::RpHooi => rp_hooi(t, cfg),
            Algorithm::RSthosvd => r_sthosvd(t, cfg),
            Algorithm::RPet => r_pet(t, cfg),
            Algorithm::RSt => r_st(t, cfg),
            Algorithm::RHoid => r_hoid(t, cfg),
            Algorithm::RLshooi => r_lshooi(t, cfg),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = TuckerError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| TuckerError::InvalidParameter(format!("unknown algorithm '{s}'")))
    }
}

/// Accuracy and cost of one decomposition run.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub relative_error: f64,
    pub fit: f64,
    pub wall_time: Duration,
    pub iterations: usize,
    pub passes: usize,
}

impl DecompositionReport {
    pub fn evaluate(t: &DenseTensor, d: &Decomposition, wall_time: Duration) -> Result<Self> {
        let relative_error = metrics::relative_error(t, &d.model)?;
        Ok(Self {
            relative_error,
            fit: 1.0 - relative_error,
            wall_time,
            iterations: d.iterations,
            passes: d.passes,
        })
    }
}

/// Runs `algo`, timing only the decomposition call.
pub fn decompose(t: &DenseTensor, algo: Algorithm, cfg: &TuckerConfig) -> Result<(Decomposition, DecompositionReport)> {
    let start = Instant::now();
    let d = algo.run(t, cfg)?;
    let elapsed = start.elapsed();
    let report = DecompositionReport::evaluate(t, &d, elapsed)?;
    Ok((d, report))
}

#[cfg(test)]
mod tests;
