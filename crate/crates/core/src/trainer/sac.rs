use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::ReplayBuffer;
use crate::autodiff::{Tape, Var};
use crate::discriminator::{Discriminator, SampleBatch};
use crate::error::{Error, Result};
use crate::graph_policy::{sample_edges, EncoderState, GraphPolicy};
use crate::nn::{clip_grad_norm, AdamConfig, AdamState, FullGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SacConfig {
    pub gamma: f64,
    /// Entropy weight, also the SAC temperature.
    pub entropy: f64,
    pub polyak_rho: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub updates_per_epoch: usize,
    pub buffer_capacity: usize,
    pub grad_clip: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            entropy: 0.01,
            polyak_rho: 0.995,
            batch_size: 256,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            updates_per_epoch: 10,
            buffer_capacity: 100_000,
            grad_clip: 10.0,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.entropy >= 0.0) {
            return Err(Error::Config("entropy weight must be >= 0".into()));
        }
        if !(self.polyak_rho > 0.0 && self.polyak_rho < 1.0) {
            return Err(Error::Config("polyak rho must lie in (0, 1)".into()));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err(Error::Config("batch size and buffer capacity must be positive".into()));
        }
        Ok(())
    }
}

/// Optimizer state for the encoder, actor and online critic.
#[derive(Clone, Debug)]
pub struct SacOptim {
    pub encoder: AdamState,
    pub actor: AdamState,
    pub critic: AdamState,
}

impl SacOptim {
    pub fn new(policy: &GraphPolicy, cfg: &SacConfig) -> Self {
        Self {
            encoder: AdamState::new(&policy.encoder_params, AdamConfig::with_lr(cfg.critic_lr)),
            actor: AdamState::new(&policy.actor_params, AdamConfig::with_lr(cfg.actor_lr)),
            critic: AdamState::new(&policy.critics.online, AdamConfig::with_lr(cfg.critic_lr)),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SacStats {
    pub critic_loss: f64,
    /// `E[Q(s, a~pi) - entropy * log pi(a|s)]`
    pub actor_objective: f64,
    pub mean_reward: f64,
    pub skipped: bool,
}

/// `y = r + gamma (1 - done) (Q_target - entropy * log_pi)`.
pub fn critic_target(reward: f64, gamma: f64, done: bool, q_target: f64, log_pi: f64, entropy: f64) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * (q_target - entropy * log_pi)
    }
}

/// A sampled minibatch laid out as one graph batch.
#[derive(Clone, Debug)]
pub struct SacBatch {
    pub graph: FullGraph,
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub next_obs: Vec<f64>,
    pub done: Vec<bool>,
    pub enc: EncoderState,
}

impl SacBatch {
    pub fn gather(buffer: &ReplayBuffer, idx: &[usize], policy: &GraphPolicy) -> Result<Self> {
        let graph = policy.graph(idx.len())?;
        let mut b = SacBatch {
            graph,
            obs: Vec::new(),
            actions: Vec::new(),
            next_obs: Vec::new(),
            done: Vec::new(),
            enc: EncoderState::zeros(0, policy.encoder.hidden()),
        };
        let mut slices = Vec::with_capacity(idx.len());
        for &i in idx {
            let t = buffer.get(i).ok_or(Error::Empty("replay entry"))?;
            b.obs.extend_from_slice(&t.obs);
            b.actions.extend_from_slice(&t.action);
            b.next_obs.extend_from_slice(&t.next_obs);
            b.done.push(t.done);
            slices.push((t.enc_h.as_slice(), t.enc_c.as_slice()));
        }
        b.enc = EncoderState::from_slices(slices.into_iter(), policy.encoder.hidden())?;
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.done.is_empty()
    }

    /// Discriminator input rows for the stored `(s, a)` pairs.
    pub fn sample_batch(&self) -> SampleBatch {
        let b = self.len();
        let w_s = self.obs.len() / b;
        let w_a = self.actions.len() / b;
        SampleBatch {
            state_width: w_s,
            action_width: w_a,
            states: self.obs.clone(),
            actions: self.actions.clone(),
            labels: vec![0.0; b],
        }
    }
}

/// Mean over agents of per-agent log-probs, `[B]`.
fn joint_log_prob(tape: &mut Tape, graph: &FullGraph, log_prob: Var) -> Result<Var> {
    let lp = tape.reshape(log_prob, &[graph.batch(), graph.nodes()])?;
    tape.mean(lp, Some(1))
}

/// One SAC step on a gathered batch with given rewards. The critic loss
/// trains the encoder; the actor sees the graph as a constant.
pub fn sac_step(
    policy: &mut GraphPolicy,
    optim: &mut SacOptim,
    batch: &SacBatch,
    rewards: &[f64],
    cfg: &SacConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SacStats> {
    let graph = &batch.graph;
    let (rows, ds, da) = (graph.node_rows(), policy.cfg.state_dim, policy.cfg.action_dim);
    if rewards.len() != batch.len() {
        return Err(Error::ShapeMismatch {
            op: "sac rewards",
            left: vec![rewards.len()],
            right: vec![batch.len()],
        });
    }

    // Bootstrapped targets, no gradient.
    let targets = {
        let mut t = Tape::new();
        let enc = policy.encoder_params.bind_frozen(&mut t);
        let act = policy.actor_params.bind_frozen(&mut t);
        let tgt = policy.critics.target.bind_frozen(&mut t);
        let x = t.constant(&[rows, ds], batch.obs.clone())?;
        let s1 = policy.encoder.step_from(&mut t, &enc, graph, &batch.enc, x)?;
        let x1 = t.constant(&[rows, ds], batch.next_obs.clone())?;
        let s2 = policy.encoder.step(&mut t, &enc, graph, s1.h, s1.c, x1)?;
        let z1 = sample_edges(&mut t, &s2.graph, false, rng)?;
        let out = policy.actor.forward(&mut t, &act, graph, x1, z1, rng)?;
        let q = policy.critic.forward(&mut t, &tgt, graph, x1, z1, out.action)?;
        let lp = joint_log_prob(&mut t, graph, out.log_prob)?;
        let (q, lp) = (t.value(q), t.value(lp));
        (0..batch.len())
            .map(|i| critic_target(rewards[i], cfg.gamma, batch.done[i], q[i], lp[i], cfg.entropy))
            .collect::<Vec<f64>>()
    };

    // Critic and encoder.
    let (critic_loss, z_vals) = {
        let mut t = Tape::new();
        let enc = policy.encoder_params.bind(&mut t);
        let cr = policy.critics.online.bind(&mut t);
        let x = t.constant(&[rows, ds], batch.obs.clone())?;
        let s1 = policy.encoder.step_from(&mut t, &enc, graph, &batch.enc, x)?;
        let z = sample_edges(&mut t, &s1.graph, false, rng)?;
        let a = t.constant(&[rows, da], batch.actions.clone())?;
        let q = policy.critic.forward(&mut t, &cr, graph, x, z, a)?;
        let y = t.constant(&[batch.len()], targets)?;
        let diff = t.sub(q, y)?;
        let sq = t.square(diff);
        let loss = t.mean(sq, None)?;
        let value = t.item(loss);
        if !value.is_finite() {
            return Err(Error::NonFinite("critic loss"));
        }
        t.backward(loss)?;
        policy.encoder_params.accumulate_grads(&t, &enc);
        policy.critics.online.accumulate_grads(&t, &cr);
        let z_vals = t.value(z).to_vec();
        (value, z_vals)
    };
    if cfg.grad_clip > 0.0 {
        clip_grad_norm(&mut policy.encoder_params, cfg.grad_clip);
        clip_grad_norm(&mut policy.critics.online, cfg.grad_clip);
    }
    optim.encoder.step(&mut policy.encoder_params)?;
    optim.critic.step(&mut policy.critics.online)?;

    // Actor against the updated critic.
    let actor_objective = {
        let mut t = Tape::new();
        let act = policy.actor_params.bind(&mut t);
        let cr = policy.critics.online.bind_frozen(&mut t);
        let x = t.constant(&[rows, ds], batch.obs.clone())?;
        let k = z_vals.len() / graph.edge_rows();
        let z = t.constant(&[graph.edge_rows(), k], z_vals)?;
        let out = policy.actor.forward(&mut t, &act, graph, x, z, rng)?;
        let q = policy.critic.forward(&mut t, &cr, graph, x, z, out.action)?;
        let lp = joint_log_prob(&mut t, graph, out.log_prob)?;
        let ent = t.scale(lp, cfg.entropy);
        let per = t.sub(ent, q)?;
        let loss = t.mean(per, None)?;
        let value = t.item(loss);
        if !value.is_finite() {
            return Err(Error::NonFinite("actor loss"));
        }
        t.backward(loss)?;
        policy.actor_params.accumulate_grads(&t, &act);
        -value
    };
    if cfg.grad_clip > 0.0 {
        clip_grad_norm(&mut policy.actor_params, cfg.grad_clip);
    }
    optim.actor.step(&mut policy.actor_params)?;
    policy.critics.polyak_update()?;

    Ok(SacStats {
        critic_loss,
        actor_objective,
        mean_reward: rewards.iter().sum::<f64>() / rewards.len() as f64,
        skipped: false,
    })
}

/// Sample a minibatch from both generated and interpolated transitions,
/// score it with the live discriminator, and take one SAC step. Skips
/// (with `skipped = true`) while the buffer holds fewer than a batch.
pub fn sac_update(
    policy: &mut GraphPolicy,
    optim: &mut SacOptim,
    buffer: &ReplayBuffer,
    disc: &Discriminator,
    cfg: &SacConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SacStats> {
    if buffer.len() < cfg.batch_size {
        log::warn!("replay buffer holds {} < batch {}; skipping update", buffer.len(), cfg.batch_size);
        return Ok(SacStats {
            skipped: true,
            ..SacStats::default()
        });
    }
    let idx = buffer.sample_indices(cfg.batch_size, rng);
    let batch = SacBatch::gather(buffer, &idx, policy)?;
    let rewards = disc.reward(&batch.sample_batch())?;
    sac_step(policy, optim, &batch, &rewards, cfg, rng)
}
