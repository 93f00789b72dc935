//! Environments, expert generators and trajectory data.

mod io;
mod letters;
mod normalize;
mod recorded;
mod trajectory;
mod yjunction;

pub use io::{load_trajectories, read_trajectories, write_trajectories};
pub use letters::{letters_expert, LetterSpec, Letters};
pub use normalize::Normalizer;
pub use recorded::RecordedEnv;
pub use trajectory::{add_noise, inject_noise, Trajectory};
pub use yjunction::{Branch, YJunction, YJunctionConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static description of a multi-agent environment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub agents: usize,
    pub state_dim: usize,
    pub action_dim: usize,
    pub horizon: usize,
    pub dt: f64,
    /// Per-component action limit `v_max`.
    pub action_bound: f64,
}

pub trait Environment: Send + Sync {
    fn spec(&self) -> EnvSpec;

    /// Deterministic joint transition. `states` is `[N * d_s]`, `actions` `[N * d_a]`.
    fn step(&self, states: &[f64], actions: &[f64]) -> Result<Vec<f64>>;

    /// One expert episode; the seed fixes the start state and the mode.
    fn expert(&self, seed: u64) -> Trajectory;

    /// Noise-free expert per behavior mode.
    fn mode_templates(&self) -> Vec<Trajectory>;
}

/// Point-mass integrator `s' = s + clip(a, ±bound)·dt`.
pub fn integrator_step(states: &[f64], actions: &[f64], dt: f64, bound: f64) -> Result<Vec<f64>> {
    if states.len() != actions.len() {
        return Err(Error::ShapeMismatch {
            op: "integrator_step",
            left: vec![states.len()],
            right: vec![actions.len()],
        });
    }
    if actions.iter().any(|a| a.is_nan()) {
        return Err(Error::NonFinite("action"));
    }
    Ok(states
        .iter()
        .zip(actions)
        .map(|(s, a)| s + a.clamp(-bound, bound) * dt)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_action_is_identity() {
        let s = vec![0.3, -1.2, 4.0, 5.0];
        assert_eq!(integrator_step(&s, &[0.0; 4], 0.1, 2.0).unwrap(), s);
    }

    #[test]
    fn unit_up_moves_by_dt() {
        let s = integrator_step(&[0.0, 0.0], &[0.0, 1.0], 0.1, 2.0).unwrap();
        assert_eq!(s, vec![0.0, 0.1]);
    }

    #[test]
    fn actions_are_clipped() {
        let s = integrator_step(&[0.0, 0.0], &[10.0, -10.0], 0.1, 2.0).unwrap();
        assert_eq!(s, vec![0.2, -0.2]);
    }

    #[test]
    fn nan_action_rejected() {
        assert!(integrator_step(&[0.0], &[f64::NAN], 0.1, 2.0).is_err());
    }
}
