//! Self-supervised adversarial imitation learning for multi-agent trajectories.
//!
//! The crate is organized bottom-up:
//!
//! - [`autodiff`]: reverse-mode differentiation tape over dense `f64` arrays.
//! - [`nn`]: MLPs, LSTM cell, message passing, Adam, checkpoints.
//! - [`graph_policy`]: interaction-graph encoder and the graph soft actor-critic.
//! - [`discriminator`]: the self-supervised MSE objective with α-interpolated
//!   trajectories, plus GAIL and Wasserstein baselines.
//! - [`curriculum`]: trajectory forcing schedule.
//! - [`envs`]: Y-Junction and letters environments, trajectory files, noise.
//! - [`trainer`]: the adversarial training loop, SAC, metrics and evaluation.
//!
//! Runnable walkthroughs live under `examples/`.

pub mod autodiff;
pub mod curriculum;
pub mod discriminator;
pub mod envs;
pub mod error;
pub mod graph_policy;
pub mod nn;
pub mod trainer;

pub use error::{Error, Result};
