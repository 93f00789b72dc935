use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use crate::error::{Error, Result};

/// Per-dimension affine map of the fitted state range onto `[-1, 1]`.
/// Dimensions are pooled over agents and time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn fit(trajs: &[Trajectory]) -> Result<Self> {
        let first = trajs.first().ok_or(Error::Empty("normalizer fit set"))?;
        let d = first.state_dim();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for tr in trajs {
            if tr.state_dim() != d {
                return Err(Error::InvalidArgument("state dimension differs across trajectories".into()));
            }
            for (k, &v) in tr.states().iter().enumerate() {
                min[k % d] = min[k % d].min(v);
                max[k % d] = max[k % d].max(v);
            }
        }
        Self::new(min, max)
    }

    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::InvalidArgument("normalizer bounds length mismatch".into()));
        }
        if let Some(k) = (0..min.len()).find(|&k| !(max[k] > min[k])) {
            return Err(Error::InvalidArgument(format!(
                "degenerate range in dimension {k}: [{}, {}]",
                min[k], max[k]
            )));
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Multiplier from raw to normalized units in dimension `k`.
    pub fn scale(&self, k: usize) -> f64 {
        2.0 / (self.max[k] - self.min[k])
    }

    /// Normalize a flat buffer whose innermost axis is the state dimension.
    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        let d = self.dim();
        raw.iter()
            .enumerate()
            .map(|(i, &v)| {
                let k = i % d;
                2.0 * (v - self.min[k]) / (self.max[k] - self.min[k]) - 1.0
            })
            .collect()
    }

    pub fn denormalize(&self, norm: &[f64]) -> Vec<f64> {
        let d = self.dim();
        norm.iter()
            .enumerate()
            .map(|(i, &v)| {
                let k = i % d;
                (v + 1.0) * 0.5 * (self.max[k] - self.min[k]) + self.min[k]
            })
            .collect()
    }

    /// Trajectory with normalized states; actions stay in environment units.
    pub fn normalize_trajectory(&self, tr: &Trajectory) -> Result<Trajectory> {
        Trajectory::new(
            tr.agents(),
            tr.state_dim(),
            tr.action_dim(),
            self.normalize(tr.states()),
            tr.actions().to_vec(),
            tr.mode_tag,
        )
    }
}
