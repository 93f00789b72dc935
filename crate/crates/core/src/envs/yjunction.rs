use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use super::{integrator_step, EnvSpec, Environment};
use crate::error::Result;

/// Expert branch taken after the fork.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Left = 0,
    Right = 1,
}

impl Branch {
    pub fn direction(self) -> [f64; 2] {
        match self {
            Branch::Left => [-FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            Branch::Right => [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Branch::Left
        } else {
            Branch::Right
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct YJunctionConfig {
    pub dt: f64,
    pub horizon: usize,
    pub action_bound: f64,
    pub expert_speed: f64,
    /// Trunk length before the split, measured as the fork's `y`.
    pub fork_y: f64,
    pub start_ys: Vec<f64>,
    pub jitter: f64,
}

impl Default for YJunctionConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon: 50,
            action_bound: 2.0,
            expert_speed: 1.0,
            fork_y: 1.0,
            start_ys: vec![-2.0, -1.0, 0.0],
            jitter: 0.1,
        }
    }
}

/// Three agents in single file on a one-way street (`x = 0`, heading `+y`)
/// that splits at `fork_y` into two ±45° branches. Agents are point masses
/// under `s' = s + a·dt` on an unbounded plane.
#[derive(Clone, Debug, Default)]
pub struct YJunction {
    pub cfg: YJunctionConfig,
}

impl YJunction {
    pub fn new(cfg: YJunctionConfig) -> Self {
        Self { cfg }
    }

    pub fn agents(&self) -> usize {
        self.cfg.start_ys.len()
    }

    /// Agents on the trunk centerline at their start heights, each
    /// coordinate jittered uniformly by at most `jitter`.
    pub fn reset(&self, seed: u64) -> Vec<f64> {
        self.reset_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn reset_with(&self, rng: &mut impl Rng) -> Vec<f64> {
        let j = self.cfg.jitter;
        let mut out = Vec::with_capacity(2 * self.agents());
        for &y in &self.cfg.start_ys {
            let (dx, dy) = if j > 0.0 {
                (rng.gen_range(-j..=j), rng.gen_range(-j..=j))
            } else {
                (0.0, 0.0)
            };
            out.push(dx);
            out.push(y + dy);
        }
        out
    }

    /// Expert episode from `seed`. The branch is uniform unless given.
    pub fn expert_with_mode(&self, seed: u64, mode: Option<Branch>) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let branch = mode.unwrap_or_else(|| if rng.gen::<bool>() { Branch::Left } else { Branch::Right });
        let start = self.reset_with(&mut rng);
        self.expert_from(&start, branch)
    }

    /// Constant-speed expert from a given start: up the trunk, then along
    /// the shared branch. Actions are the velocities actually applied.
    pub fn expert_from(&self, start: &[f64], branch: Branch) -> Trajectory {
        let c = &self.cfg;
        let n = start.len() / 2;
        let dir = branch.direction();
        let step_len = c.expert_speed * c.dt;
        let path = |x0: f64, y0: f64, s: f64| -> [f64; 2] {
            let trunk = (c.fork_y - y0).max(0.0);
            if s <= trunk {
                [x0, y0 + s]
            } else {
                let rest = s - trunk;
                [x0 + rest * dir[0], y0 + trunk + rest * dir[1]]
            }
        };
        let mut states = Vec::with_capacity(c.horizon * n * 2);
        let mut actions = Vec::with_capacity(c.horizon * n * 2);
        let mut cur = start.to_vec();
        for t in 0..c.horizon {
            states.extend_from_slice(&cur);
            let mut a = Vec::with_capacity(n * 2);
            for agent in 0..n {
                let (x0, y0) = (start[2 * agent], start[2 * agent + 1]);
                let target = path(x0, y0, (t + 1) as f64 * step_len);
                a.push((target[0] - cur[2 * agent]) / c.dt);
                a.push((target[1] - cur[2 * agent + 1]) / c.dt);
            }
            cur = integrator_step(&cur, &a, c.dt, c.action_bound).expect("expert actions are finite");
            actions.extend(a);
        }
        Trajectory::new(n, 2, 2, states, actions, Some(branch as usize)).expect("expert layout is valid")
    }

    /// Jitter-free expert for each branch.
    pub fn mode_templates(&self) -> Vec<Trajectory> {
        let start: Vec<f64> = self.cfg.start_ys.iter().flat_map(|&y| [0.0, y]).collect();
        [Branch::Left, Branch::Right]
            .into_iter()
            .map(|b| self.expert_from(&start, b))
            .collect()
    }
}

impl Environment for YJunction {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            agents: self.agents(),
            state_dim: 2,
            action_dim: 2,
            horizon: self.cfg.horizon,
            dt: self.cfg.dt,
            action_bound: self.cfg.action_bound,
        }
    }

    fn step(&self, states: &[f64], actions: &[f64]) -> Result<Vec<f64>> {
        integrator_step(states, actions, self.cfg.dt, self.cfg.action_bound)
    }

    fn expert(&self, seed: u64) -> Trajectory {
        self.expert_with_mode(seed, None)
    }

    fn mode_templates(&self) -> Vec<Trajectory> {
        YJunction::mode_templates(self)
    }
}
