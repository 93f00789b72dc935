use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discriminator::{Discriminator, SampleBatch};
use crate::envs::Normalizer;
use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in raw coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Region {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || [x0, y0, x1, y1].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "zero-area landscape region ({x0},{y0})-({x1},{y1})"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }
}

impl std::str::FromStr for Region {
    type Err = Error;

    /// `x0,y0,x1,y1`
    fn from_str(s: &str) -> Result<Self> {
        let v = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("region `{s}`: {e}")))?;
        if v.len() != 4 {
            return Err(Error::InvalidArgument(format!("region `{s}` needs four numbers")));
        }
        Region::new(v[0], v[1], v[2], v[3])
    }
}

/// A 2D slice through the discriminator input: the position of `agent`
/// sweeps the region while every other state and all actions stay at the
/// base values (raw units).
#[derive(Clone, Debug, PartialEq)]
pub struct LandscapeSlice {
    pub base_state: Vec<f64>,
    pub base_action: Vec<f64>,
    pub agent: usize,
    pub state_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

/// Discriminator scores on a `resolution x resolution` grid (cell centers
/// include the region corners), rows ordered by `y` then `x`.
pub fn landscape_grid(
    disc: &Discriminator,
    norm: &Normalizer,
    slice: &LandscapeSlice,
    region: Region,
    resolution: usize,
) -> Result<Vec<GridPoint>> {
    Region::new(region.x0, region.y0, region.x1, region.y1)?;
    if resolution < 2 {
        return Err(Error::InvalidArgument("landscape resolution must be at least 2".into()));
    }
    if slice.state_dim < 2 || (slice.agent + 1) * slice.state_dim > slice.base_state.len() {
        return Err(Error::InvalidArgument("landscape agent outside the joint state".into()));
    }
    let step_x = (region.x1 - region.x0) / (resolution - 1) as f64;
    let step_y = (region.y1 - region.y0) / (resolution - 1) as f64;
    let mut batch = SampleBatch::new(slice.base_state.len(), slice.base_action.len());
    let mut points = Vec::with_capacity(resolution * resolution);
    for iy in 0..resolution {
        for ix in 0..resolution {
            let (x, y) = (region.x0 + ix as f64 * step_x, region.y0 + iy as f64 * step_y);
            let mut s = slice.base_state.clone();
            s[slice.agent * slice.state_dim] = x;
            s[slice.agent * slice.state_dim + 1] = y;
            batch.push(&norm.normalize(&s), &slice.base_action, 0.0);
            points.push((x, y));
        }
    }
    let scores = disc.score(&batch)?;
    Ok(points
        .into_iter()
        .zip(scores)
        .map(|((x, y), score)| GridPoint { x, y, score })
        .collect())
}

pub fn write_landscape(path: impl AsRef<Path>, grid: &[GridPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "score"])?;
    for p in grid {
        w.write_record([format!("{:.10e}", p.x), format!("{:.10e}", p.y), format!("{:.10e}", p.score)])?;
    }
    w.flush()?;
    Ok(())
}
