//! Randomized matrix primitives: range finders, randomized SVD, single-pass
//! sketches, column sampling, count-sketch and sketched least squares.

mod config;
pub mod count_sketch;
pub mod lsq;
mod operator;
pub mod rsvd;
pub mod sampling;
pub mod single_pass;
pub mod tensor_sketch;

pub use config::{LowRankFactors, QbFactors, SketchConfig, SvdFactors, TwoSidedFactors};
pub use count_sketch::{CountSketchOp, Side};
pub use lsq::{sketched_lsq, LsqConfig, LsqSketch, RowOperator};
pub use operator::{LinearOperator, Unfolding};
pub use rsvd::{range_finder, rsvd_basic, rsvd_error_bound, rsvd_two_sided};
pub use sampling::{column_sample_qb, SampleConfig, SamplingDistribution};
pub use single_pass::{single_pass_qb, single_pass_two_sided, CountingMatrix, MatrixSource};
pub use tensor_sketch::KroneckerSketch;
