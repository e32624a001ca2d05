pub mod cpd;
pub mod error;
pub mod rng;
pub mod sketch;
pub mod metrics;
pub mod synth;
pub mod tensor;
pub mod tucker;

pub use cpd::{cp_als, tucker_then_cp, CpConfig, CpModel};
pub use error::{Result, TuckerError};
pub use rng::{Distribution, RandomStream};
pub use tensor::{DenseTensor, ModeOp, MultilinearRank, Shape, SparseTensor, TuckerModel};
pub use tucker::{decompose, Algorithm, Decomposition, DecompositionReport, TuckerConfig};
