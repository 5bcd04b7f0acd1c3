//! Dense matrices and seeded randomness.

mod matrix;
mod rng;

pub use matrix::{ElemOp, Matrix};
pub use rng::Rng;
