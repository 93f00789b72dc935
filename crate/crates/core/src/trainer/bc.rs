use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rollout::sample_references;
use crate::autodiff::Tape;
use crate::curriculum::Forcing;
use crate::envs::{EnvSpec, Normalizer, Trajectory};
use crate::error::{Error, Result};
use crate::graph_policy::{sample_edges, GraphPolicy, INPUT_LIMIT};
use crate::nn::{clip_grad_norm, AdamConfig, AdamState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BcConfig {
    pub epochs: usize,
    pub batch_episodes: usize,
    pub learning_rate: f64,
    pub forcing: Forcing,
    pub grad_clip: f64,
}

impl Default for BcConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_episodes: 16,
            learning_rate: 3e-3,
            forcing: Forcing::Off,
            grad_clip: 10.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BcReport {
    /// Mean per-step squared error of each epoch.
    pub losses: Vec<f64>,
}

/// Multi-step behavioral cloning of the policy's encoder and deterministic
/// actor head: unroll the whole horizon through the integrator, regress
/// predicted next states onto the expert's (normalized units), and feed the
/// expert state instead of the prediction at scheduled forcing steps.
pub fn bc_baseline_train(
    policy: &mut GraphPolicy,
    spec: &EnvSpec,
    norm: &Normalizer,
    dataset: &[Trajectory],
    cfg: &BcConfig,
    seed: u64,
) -> Result<BcReport> {
    if dataset.is_empty() {
        return Err(Error::Empty("behavioral cloning dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut enc_adam = AdamState::new(&policy.encoder_params, AdamConfig::with_lr(cfg.learning_rate));
    let mut act_adam = AdamState::new(&policy.actor_params, AdamConfig::with_lr(cfg.learning_rate));
    let mut report = BcReport::default();
    for epoch in 0..cfg.epochs {
        let refs = sample_references(dataset, cfg.batch_episodes.max(1), &mut rng);
        let f = cfg.forcing.frequency(epoch)?;
        let loss = bc_step(policy, spec, norm, &refs, f, &mut rng)?;
        for (set, adam) in [
            (&mut policy.encoder_params, &mut enc_adam),
            (&mut policy.actor_params, &mut act_adam),
        ] {
            if cfg.grad_clip > 0.0 {
                clip_grad_norm(set, cfg.grad_clip);
            }
            adam.step(set)?;
        }
        report.losses.push(loss);
    }
    Ok(report)
}

/// Forward/backward of one multi-step BC loss; gradients are left in the
/// encoder and actor parameter sets.
pub fn bc_step(
    policy: &mut GraphPolicy,
    spec: &EnvSpec,
    norm: &Normalizer,
    refs: &[Trajectory],
    forcing: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let ds = spec.state_dim;
    if spec.action_dim != ds {
        return Err(Error::Config("behavioral cloning assumes velocity actions (d_a == d_s)".into()));
    }
    let b = refs.len();
    let horizon = refs.iter().map(|r| r.horizon()).min().unwrap_or(0).min(spec.horizon);
    if horizon < 2 {
        return Err(Error::InvalidArgument("behavioral cloning needs horizon >= 2".into()));
    }
    let graph = policy.graph(b)?;
    let rows = graph.node_rows();
    let gt = |t: usize| -> Vec<f64> { refs.iter().flat_map(|r| norm.normalize(r.state(t))).collect() };
    // Normalized displacement per unit action and step.
    let gain: Vec<f64> = (0..ds).map(|k| spec.dt * norm.scale(k)).collect();

    let mut tape = Tape::new();
    let enc = policy.encoder_params.bind(&mut tape);
    let act = policy.actor_params.bind(&mut tape);
    let gain_v = tape.constant(&[ds], gain)?;
    let zeros = tape.constant(&[graph.edge_rows(), policy.encoder.hidden()], vec![0.0; graph.edge_rows() * policy.encoder.hidden()])?;
    let (mut h, mut c) = (zeros, zeros);
    let mut x = tape.constant(&[rows, ds], gt(0))?;
    let mut terms = Vec::with_capacity(horizon - 1);
    for t in 0..horizon - 1 {
        let step = policy.encoder.step(&mut tape, &enc, &graph, h, c, x)?;
        h = step.h;
        c = step.c;
        let z = sample_edges(&mut tape, &step.graph, true, rng)?;
        let a = policy.actor.mean_action(&mut tape, &act, &graph, x, z)?;
        let delta = tape.mul(a, gain_v)?;
        let pred = tape.add(x, delta)?;
        let target = tape.constant(&[rows, ds], gt(t + 1))?;
        let diff = tape.sub(pred, target)?;
        let sq = tape.square(diff);
        terms.push(tape.mean(sq, None)?);
        x = if forcing > 0.0 && rng.gen::<f64>() < forcing {
            target
        } else {
            // Straight-through clip into the encoder's input range.
            let vals = tape.value(pred).to_vec();
            let shift: Vec<f64> = vals.iter().map(|v| v.clamp(-INPUT_LIMIT, INPUT_LIMIT) - v).collect();
            let shift = tape.constant(&[rows, ds], shift)?;
            tape.add(pred, shift)?
        };
    }
    let mut total = terms[0];
    for &term in &terms[1..] {
        total = tape.add(total, term)?;
    }
    let loss = tape.scale(total, 1.0 / terms.len() as f64);
    let value = tape.item(loss);
    if !value.is_finite() {
        return Err(Error::NonFinite("bc loss"));
    }
    tape.backward(loss)?;
    policy.encoder_params.accumulate_grads(&tape, &enc);
    policy.actor_params.accumulate_grads(&tape, &act);
    Ok(value)
}
