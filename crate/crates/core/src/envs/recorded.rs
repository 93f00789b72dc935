use super::{integrator_step, EnvSpec, Environment, Trajectory};
use crate::error::{Error, Result};

/// Recorded expert episodes replayed under the point-mass integrator.
/// Actions are velocities, so `d_a` must equal `d_s`.
#[derive(Clone, Debug)]
pub struct RecordedEnv {
    episodes: Vec<Trajectory>,
    dt: f64,
    action_bound: f64,
}

impl RecordedEnv {
    pub fn new(episodes: Vec<Trajectory>, dt: f64, action_bound: f64) -> Result<Self> {
        let first = episodes.first().ok_or(Error::Empty("recorded episodes"))?;
        if episodes.iter().any(|e| !e.same_layout(first)) {
            return Err(Error::InvalidArgument("recorded episodes differ in layout".into()));
        }
        if first.action_dim() != first.state_dim() {
            return Err(Error::Config("recorded data needs velocity actions (d_a == d_s)".into()));
        }
        if !(dt > 0.0 && action_bound > 0.0) {
            return Err(Error::Config("dt and action bound must be positive".into()));
        }
        Ok(Self {
            episodes,
            dt,
            action_bound,
        })
    }

    pub fn episodes(&self) -> &[Trajectory] {
        &self.episodes
    }
}

impl Environment for RecordedEnv {
    fn spec(&self) -> EnvSpec {
        let e = &self.episodes[0];
        EnvSpec {
            agents: e.agents(),
            state_dim: e.state_dim(),
            action_dim: e.action_dim(),
            horizon: self.episodes.iter().map(|e| e.horizon()).min().unwrap_or(0),
            dt: self.dt,
            action_bound: self.action_bound,
        }
    }

    fn step(&self, states: &[f64], actions: &[f64]) -> Result<Vec<f64>> {
        integrator_step(states, actions, self.dt, self.action_bound)
    }

    /// Episode `seed mod len`.
    fn expert(&self, seed: u64) -> Trajectory {
        self.episodes[(seed % self.episodes.len() as u64) as usize].clone()
    }

    fn mode_templates(&self) -> Vec<Trajectory> {
        Vec::new()
    }
}
