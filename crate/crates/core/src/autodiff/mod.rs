//! Reverse-mode automatic differentiation over dense `f64` arrays.
//!
//! A [`Tape`] is built fresh for every forward pass. Parameters live in
//! [`Tensor`]s between passes and are copied onto the tape as leaves.

mod tape;
mod tensor;

pub use tape::{ElementwiseOp, ReduceOp, Tape, Var};
pub use tensor::Tensor;
