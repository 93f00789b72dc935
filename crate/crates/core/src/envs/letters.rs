use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use super::{integrator_step, EnvSpec, Environment};
use crate::error::{Error, Result};

/// One waypoint polyline per agent, traversed at constant speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LetterSpec {
    pub strokes: Vec<Vec<[f64; 2]>>,
}

impl LetterSpec {
    /// The two-letter "ML" sketch: one agent per letter.
    pub fn ml() -> Self {
        Self {
            strokes: vec![
                vec![[0.0, 0.0], [0.0, 2.0], [0.75, 1.0], [1.5, 2.0], [1.5, 0.0]],
                vec![[2.5, 2.0], [2.5, 0.0], [3.5, 0.0]],
            ],
        }
    }
}

fn polyline_length(points: &[[f64; 2]]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum()
}

fn point_at(points: &[[f64; 2]], mut s: f64) -> [f64; 2] {
    for w in points.windows(2) {
        let seg = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        if s <= seg {
            let f = s / seg;
            return [w[0][0] + f * (w[1][0] - w[0][0]), w[0][1] + f * (w[1][1] - w[0][1])];
        }
        s -= seg;
    }
    *points.last().expect("polyline is nonempty")
}

/// Constant-speed traversal of each stroke resampled to `horizon` states:
/// the first state is the first waypoint, the last is the last waypoint.
/// Actions are the finite-difference velocities (`dt` units); the final
/// action is zero.
pub fn letters_expert(spec: &LetterSpec, horizon: usize, dt: f64) -> Result<Trajectory> {
    if horizon < 2 || spec.strokes.is_empty() {
        return Err(Error::InvalidArgument("letters need a horizon >= 2 and at least one stroke".into()));
    }
    for stroke in &spec.strokes {
        if stroke.len() < 2 {
            return Err(Error::InvalidArgument("stroke needs at least two waypoints".into()));
        }
        if stroke.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("degenerate stroke: repeated waypoint".into()));
        }
    }
    let n = spec.strokes.len();
    let mut pos = vec![[0.0; 2]; horizon * n];
    for (agent, stroke) in spec.strokes.iter().enumerate() {
        let len = polyline_length(stroke);
        for t in 0..horizon {
            let p = if t == horizon - 1 {
                *stroke.last().expect("nonempty")
            } else {
                point_at(stroke, len * t as f64 / (horizon - 1) as f64)
            };
            pos[t * n + agent] = p;
        }
    }
    let mut states = Vec::with_capacity(horizon * n * 2);
    let mut actions = Vec::with_capacity(horizon * n * 2);
    for t in 0..horizon {
        for agent in 0..n {
            let p = pos[t * n + agent];
            states.extend_from_slice(&p);
            if t + 1 < horizon {
                let q = pos[(t + 1) * n + agent];
                actions.push((q[0] - p[0]) / dt);
                actions.push((q[1] - p[1]) / dt);
            } else {
                actions.extend_from_slice(&[0.0, 0.0]);
            }
        }
    }
    Trajectory::new(n, 2, 2, states, actions, Some(0))
}

/// Point-mass environment whose single expert draws the letters.
#[derive(Clone, Debug)]
pub struct Letters {
    pub spec: LetterSpec,
    pub horizon: usize,
    pub dt: f64,
    pub action_bound: f64,
}

impl Default for Letters {
    fn default() -> Self {
        Self {
            spec: LetterSpec::ml(),
            horizon: 51,
            dt: 0.1,
            action_bound: 2.0,
        }
    }
}

impl Environment for Letters {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            agents: self.spec.strokes.len(),
            state_dim: 2,
            action_dim: 2,
            horizon: self.horizon,
            dt: self.dt,
            action_bound: self.action_bound,
        }
    }

    fn step(&self, states: &[f64], actions: &[f64]) -> Result<Vec<f64>> {
        integrator_step(states, actions, self.dt, self.action_bound)
    }

    fn expert(&self, _seed: u64) -> Trajectory {
        letters_expert(&self.spec, self.horizon, self.dt).expect("letter spec is valid")
    }

    fn mode_templates(&self) -> Vec<Trajectory> {
        vec![self.expert(0)]
    }
}
