//! Dense and sparse tensors, unfoldings, mode products and Tucker models.

mod dense;
pub mod io;
pub(crate) mod kernels;
pub mod linalg;
mod model;
mod shape;
mod sparse;

pub use dense::{DenseTensor, ModeOp};
pub use model::{MultilinearRank, TuckerModel, ORTHONORMAL_TOL};
pub use shape::Shape;
pub use sparse::SparseTensor;
