//! Trainable building blocks shared by every network: parameter sets, MLPs,
//! the LSTM cell, graph message passing, Adam and checkpoint I/O.

mod adam;
pub mod checkpoint;
mod lstm;
pub mod message;
mod mlp;
mod params;

pub use adam::{clip_grad_norm, AdamConfig, AdamState};
pub use lstm::LstmCell;
pub use message::{edge_to_node, node_to_edge, FullGraph};
pub use mlp::{Activation, Mlp};
pub use params::{Bound, ParamId, ParameterSet};
