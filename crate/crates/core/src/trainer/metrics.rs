use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rollout::{clip_obs, Controller};
use crate::envs::{add_noise, Environment, Normalizer, Trajectory};
use crate::error::{Error, Result};

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Mean over episodes of the smallest mean squared state deviation from
/// any expert mode. Modes longer than an episode are compared on the
/// episode's horizon.
pub fn training_error(generated: &[Trajectory], modes: &[Trajectory]) -> Result<f64> {
    if modes.is_empty() {
        return Err(Error::Empty("expert modes"));
    }
    if generated.is_empty() {
        return Err(Error::Empty("generated trajectories"));
    }
    let mut total = 0.0;
    for g in generated {
        let n = g.states().len();
        let mut best = f64::INFINITY;
        for m in modes {
            if m.states().len() < n || m.agents() != g.agents() || m.state_dim() != g.state_dim() {
                return Err(Error::InvalidArgument("expert mode not aligned with generated horizon".into()));
            }
            best = best.min(mse(g.states(), &m.states()[..n]));
        }
        total += best;
    }
    Ok(total / generated.len() as f64)
}

/// Like [`training_error`] but each episode is compared to its own reference.
pub fn paired_error(generated: &[Trajectory], references: &[Trajectory]) -> Result<f64> {
    if generated.len() != references.len() || generated.is_empty() {
        return Err(Error::InvalidArgument("paired error needs one reference per episode".into()));
    }
    let mut total = 0.0;
    for (g, r) in generated.iter().zip(references) {
        total += training_error(std::slice::from_ref(g), std::slice::from_ref(r))?;
    }
    Ok(total / generated.len() as f64)
}

/// Mean over agents of the Euclidean distance between final positions.
pub fn endpoint_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    let d = a.state_dim();
    let (fa, fb) = (a.final_state(), b.final_state());
    let n = a.agents();
    (0..n)
        .map(|i| {
            (0..d)
                .map(|k| (fa[i * d + k] - fb[i * d + k]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum::<f64>()
        / n as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeCoverage {
    pub frequencies: Vec<f64>,
    pub mean_distance: f64,
}

/// Assign each episode to the expert mode with the nearest endpoint.
/// Modes are compared at the episode's final step.
pub fn mode_coverage(generated: &[Trajectory], modes: &[Trajectory]) -> Result<ModeCoverage> {
    if modes.len() < 2 {
        return Err(Error::InvalidArgument("mode coverage needs at least two modes".into()));
    }
    if generated.is_empty() {
        return Err(Error::Empty("generated trajectories"));
    }
    let mut counts = vec![0usize; modes.len()];
    let mut dist = 0.0;
    for g in generated {
        let (mut best, mut best_d) = (0, f64::INFINITY);
        for (k, m) in modes.iter().enumerate() {
            let m = m.truncated(g.horizon().min(m.horizon()))?;
            let d = endpoint_distance(g, &m);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        counts[best] += 1;
        dist += best_d;
    }
    let n = generated.len() as f64;
    Ok(ModeCoverage {
        frequencies: counts.iter().map(|&c| c as f64 / n).collect(),
        mean_distance: dist / n,
    })
}

/// Compounding error of a controller on ground-truth trajectories. Each
/// episode feeds `prefix` ground-truth observations, then runs on its own
/// predictions; all observations carry `N(0, noise_sigma^2)` noise in
/// normalized units. Entry `k` is the mean squared normalized deviation
/// from ground truth `horizons[k]` steps after the prefix. Actions are the
/// controller's deterministic ones.
#[allow(clippy::too_many_arguments)]
pub fn compounding_error<C: Controller>(
    ctrl: &C,
    env: &dyn Environment,
    norm: &Normalizer,
    dataset: &[Trajectory],
    noise_sigma: f64,
    horizons: &[usize],
    prefix: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::Empty("compounding-error dataset"));
    }
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(Error::InvalidArgument("horizons must be positive and nonempty".into()));
    }
    let max_h = *horizons.iter().max().expect("nonempty");
    let len = dataset.iter().map(|t| t.horizon()).min().expect("nonempty");
    if prefix == 0 || prefix + max_h > len {
        return Err(Error::InvalidArgument(format!(
            "prefix {prefix} + horizon {max_h} exceeds trajectory length {len}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = dataset.len();
    let spec = env.spec();
    let w_a = spec.agents * spec.action_dim;
    let mut mem = ctrl.begin(b)?;
    // Warm up on the ground-truth prefix; the last action of the prefix
    // produces the first free-running state.
    let mut raw: Vec<Vec<f64>> = Vec::new();
    for t in 0..prefix {
        let gt: Vec<Vec<f64>> = dataset.iter().map(|d| d.state(t).to_vec()).collect();
        let mut flat: Vec<f64> = gt.iter().flat_map(|s| norm.normalize(s)).collect();
        add_noise(&mut flat, noise_sigma, &mut rng);
        clip_obs(&mut flat);
        let a = ctrl.act(&mut mem, &flat, true, &mut rng)?;
        raw = gt
            .iter()
            .enumerate()
            .map(|(e, s)| env.step(s, &a[e * w_a..(e + 1) * w_a]))
            .collect::<Result<_>>()?;
    }
    let mut per_step = Vec::with_capacity(max_h);
    for h in 1..=max_h {
        let t = prefix - 1 + h;
        let err: f64 = (0..b)
            .map(|e| mse(&norm.normalize(&raw[e]), &norm.normalize(dataset[e].state(t))))
            .sum::<f64>()
            / b as f64;
        per_step.push(err);
        if h == max_h {
            break;
        }
        let mut flat: Vec<f64> = raw.iter().flat_map(|s| norm.normalize(s)).collect();
        add_noise(&mut flat, noise_sigma, &mut rng);
        clip_obs(&mut flat);
        let a = ctrl.act(&mut mem, &flat, true, &mut rng)?;
        for e in 0..b {
            raw[e] = env.step(&raw[e], &a[e * w_a..(e + 1) * w_a])?;
        }
    }
    Ok(horizons.iter().map(|&h| per_step[h - 1]).collect())
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

/// One line of the per-seed metrics CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub seed: u64,
    pub training_error: f64,
    pub discriminator_loss: Option<f64>,
    pub policy_objective: Option<f64>,
    pub mode_coverage: Vec<f64>,
    pub mode_distance: Option<f64>,
    pub forcing_frequency: f64,
    pub mean_segment_length: Option<f64>,
    pub compounding_error: Vec<f64>,
}

pub const METRICS_HEADER: [&str; 10] = [
    "epoch",
    "seed",
    "training_error",
    "discriminator_loss",
    "policy_objective",
    "mode_coverage",
    "mode_distance",
    "forcing_frequency",
    "mean_segment_length",
    "compounding_error",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10e}")).unwrap_or_default()
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.10e}")).collect::<Vec<_>>().join(";")
}

impl MetricsRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.epoch.to_string(),
            self.seed.to_string(),
            format!("{:.10e}", self.training_error),
            opt(self.discriminator_loss),
            opt(self.policy_objective),
            list(&self.mode_coverage),
            opt(self.mode_distance),
            format!("{:.10e}", self.forcing_frequency),
            opt(self.mean_segment_length),
            list(&self.compounding_error),
        ]
    }
}

pub fn write_metrics(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}
