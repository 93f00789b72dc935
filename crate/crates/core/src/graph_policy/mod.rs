//! Multi-agent graph policy: an interaction-graph encoder that infers a
//! distribution over edge types for every ordered agent pair, and a graph
//! soft actor-critic whose messages are gated by sampled edges.

mod encoder;
mod gsac;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use encoder::{
    sample_edges, EncoderState, EncoderStep, GraphEncoder, InteractionGraphSample, INPUT_LIMIT,
};
pub use gsac::{GraphActor, GraphCritic, PolicyOutput, SIGMA_MIN};

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::nn::{FullGraph, ParameterSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub agents: usize,
    pub state_dim: usize,
    pub action_dim: usize,
    pub hidden: usize,
    /// Hidden layers per MLP.
    pub depth: usize,
    /// Edge types, including the null type 0.
    pub edge_types: usize,
    pub temperature: f64,
    pub action_bound: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            agents: 3,
            state_dim: 2,
            action_dim: 2,
            hidden: 64,
            depth: 2,
            edge_types: 2,
            temperature: 0.5,
            action_bound: 2.0,
        }
    }
}

impl PolicyConfig {
    pub fn mlp_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat(self.hidden).take(self.depth));
        sizes.push(output);
        sizes
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents < 2 {
            return Err(Error::Config(format!("need at least 2 agents, got {}", self.agents)));
        }
        if self.edge_types < 1 || self.hidden == 0 || self.state_dim == 0 || self.action_dim == 0 {
            return Err(Error::Config("policy widths must be positive".into()));
        }
        if !(self.temperature > 0.0) || !(self.action_bound > 0.0) {
            return Err(Error::Config("temperature and action bound must be positive".into()));
        }
        Ok(())
    }
}

/// Online and target critic parameters with the polyak coefficient.
#[derive(Clone, Debug)]
pub struct CriticPair {
    pub online: ParameterSet,
    pub target: ParameterSet,
    pub polyak_rho: f64,
}

impl CriticPair {
    pub fn new(online: ParameterSet, polyak_rho: f64) -> Self {
        let mut target = online.clone();
        target.zero_grad();
        Self {
            online,
            target,
            polyak_rho,
        }
    }

    /// `target ← ρ·target + (1−ρ)·online`, elementwise.
    pub fn polyak_update(&mut self) -> Result<()> {
        polyak_update(&mut self.target, &self.online, self.polyak_rho)
    }
}

pub fn polyak_update(target: &mut ParameterSet, online: &ParameterSet, rho: f64) -> Result<()> {
    target.check_same_layout(online)?;
    for ((_, t), (_, o)) in target.iter_mut().zip(online.iter()) {
        for (tv, ov) in t.data_mut().iter_mut().zip(o.data()) {
            *tv = rho * *tv + (1.0 - rho) * ov;
        }
    }
    Ok(())
}

/// The full MAIL policy: architecture plus parameters for the encoder,
/// the actor and the critic pair.
#[derive(Clone, Debug)]
pub struct GraphPolicy {
    pub cfg: PolicyConfig,
    pub encoder: GraphEncoder,
    pub actor: GraphActor,
    pub critic: GraphCritic,
    pub encoder_params: ParameterSet,
    pub actor_params: ParameterSet,
    pub critics: CriticPair,
}

/// Result of one acting step for a batch of graphs.
#[derive(Clone, Debug)]
pub struct ActStep {
    pub next_state: EncoderState,
    /// Environment-unit actions `[B * N * action_dim]`.
    pub actions: Vec<f64>,
    /// Edge-type probabilities `[B * pairs * K]`.
    pub edge_probs: Vec<f64>,
}

impl GraphPolicy {
    pub fn new(cfg: PolicyConfig, polyak_rho: f64, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut encoder_params = ParameterSet::new();
        let encoder = GraphEncoder::new(&cfg, &mut encoder_params, &mut rng)?;
        let mut actor_params = ParameterSet::new();
        let actor = GraphActor::new(&cfg, &mut actor_params, &mut rng)?;
        let mut critic_params = ParameterSet::new();
        let critic = GraphCritic::new(&cfg, &mut critic_params, &mut rng)?;
        Ok(Self {
            cfg,
            encoder,
            actor,
            critic,
            encoder_params,
            actor_params,
            critics: CriticPair::new(critic_params, polyak_rho),
        })
    }

    pub fn graph(&self, batch: usize) -> Result<FullGraph> {
        FullGraph::new(batch, self.cfg.agents)
    }

    /// One no-grad acting step. `obs` holds normalized states `[B * N * d]`.
    /// Rollouts use hard (straight-through) edge samples; `deterministic`
    /// replaces the Gaussian draw by the squashed mean.
    pub fn act(
        &self,
        graph: &FullGraph,
        state: &EncoderState,
        obs: &[f64],
        deterministic: bool,
        rng: &mut impl rand::Rng,
    ) -> Result<ActStep> {
        let mut tape = Tape::new();
        let enc = self.encoder_params.bind_frozen(&mut tape);
        let act = self.actor_params.bind_frozen(&mut tape);
        let x = tape.constant(&[graph.node_rows(), self.cfg.state_dim], obs.to_vec())?;
        let step = self.encoder.step_from(&mut tape, &enc, graph, state, x)?;
        let z = sample_edges(&mut tape, &step.graph, true, rng)?;
        let action = if deterministic {
            self.actor.mean_action(&mut tape, &act, graph, x, z)?
        } else {
            self.actor.forward(&mut tape, &act, graph, x, z, rng)?.action
        };
        let actions = tape.value(action).to_vec();
        if actions.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("action"));
        }
        Ok(ActStep {
            next_state: step.state(&tape),
            actions,
            edge_probs: tape.value(step.graph.probs).to_vec(),
        })
    }

    /// All parameter sets merged under `encoder/`, `actor/`, `critic/`, `target/`.
    pub fn export_params(&self) -> ParameterSet {
        let mut out = ParameterSet::new();
        for (prefix, set) in [
            ("encoder", &self.encoder_params),
            ("actor", &self.actor_params),
            ("critic", &self.critics.online),
            ("target", &self.critics.target),
        ] {
            for (name, t) in set.iter() {
                let mut t = t.clone();
                t.zero_grad();
                out.insert(format!("{prefix}/{name}"), t)
                    .expect("prefixed names are unique");
            }
        }
        out
    }

    /// Inverse of [`export_params`](Self::export_params): overwrite values
    /// from a merged set (extra prefixes are ignored).
    pub fn import_params(&mut self, merged: &ParameterSet) -> Result<()> {
        for (prefix, set) in [
            ("encoder", &mut self.encoder_params),
            ("actor", &mut self.actor_params),
            ("critic", &mut self.critics.online),
            ("target", &mut self.critics.target),
        ] {
            for (name, t) in set.iter_mut() {
                let key = format!("{prefix}/{name}");
                let src = merged
                    .get(&key)
                    .ok_or_else(|| Error::UnknownParameter(key.clone()))?;
                if src.shape() != t.shape() {
                    return Err(Error::ParameterMismatch(format!("`{key}` shape differs")));
                }
                t.data_mut().copy_from_slice(src.data());
            }
        }
        Ok(())
    }
}
