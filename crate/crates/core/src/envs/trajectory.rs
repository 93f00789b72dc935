use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// One episode of joint multi-agent states and actions, both stored flat
/// and time-major: `states[t][agent][dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    horizon: usize,
    agents: usize,
    state_dim: usize,
    action_dim: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    pub mode_tag: Option<usize>,
}

impl Trajectory {
    pub fn new(
        agents: usize,
        state_dim: usize,
        action_dim: usize,
        states: Vec<f64>,
        actions: Vec<f64>,
        mode_tag: Option<usize>,
    ) -> Result<Self> {
        if agents == 0 || state_dim == 0 || action_dim == 0 {
            return Err(Error::InvalidArgument("trajectory dimensions must be positive".into()));
        }
        let step_s = agents * state_dim;
        let horizon = states.len() / step_s;
        if horizon == 0 || states.len() != horizon * step_s || actions.len() != horizon * agents * action_dim {
            return Err(Error::ShapeMismatch {
                op: "trajectory",
                left: vec![states.len(), actions.len()],
                right: vec![agents, state_dim, action_dim],
            });
        }
        if states.iter().chain(&actions).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory"));
        }
        Ok(Self {
            horizon,
            agents,
            state_dim,
            action_dim,
            states,
            actions,
            mode_tag,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn states_mut(&mut self) -> &mut [f64] {
        &mut self.states
    }

    /// Joint state at step `t`, `[agents * state_dim]`.
    pub fn state(&self, t: usize) -> &[f64] {
        let w = self.agents * self.state_dim;
        &self.states[t * w..(t + 1) * w]
    }

    pub fn action(&self, t: usize) -> &[f64] {
        let w = self.agents * self.action_dim;
        &self.actions[t * w..(t + 1) * w]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.horizon - 1)
    }

    /// First `len` steps.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.horizon {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate horizon {} to {len}",
                self.horizon
            )));
        }
        Self::new(
            self.agents,
            self.state_dim,
            self.action_dim,
            self.states[..len * self.agents * self.state_dim].to_vec(),
            self.actions[..len * self.agents * self.action_dim].to_vec(),
            self.mode_tag,
        )
    }

    pub fn same_layout(&self, other: &Trajectory) -> bool {
        self.horizon == other.horizon
            && self.agents == other.agents
            && self.state_dim == other.state_dim
            && self.action_dim == other.action_dim
    }
}

/// Copy of `traj` with i.i.d. `N(0, sigma²)` added to every state component.
/// Actions are left untouched.
pub fn inject_noise(traj: &Trajectory, sigma: f64, seed: u64) -> Result<Trajectory> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let mut out = traj.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    add_noise(out.states_mut(), sigma, &mut ChaCha8Rng::seed_from_u64(seed));
    Ok(out)
}

/// In-place Gaussian perturbation of a slice of observations.
pub fn add_noise(values: &mut [f64], sigma: f64, rng: &mut impl rand::Rng) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is positive and finite");
    for v in values {
        *v += normal.sample(rng);
    }
}
