use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::buffer::{Source, Transition};
use crate::autodiff::Tape;
use crate::curriculum::{apply_forcing, ForcingPlan};
use crate::envs::{add_noise, Environment, Normalizer, Trajectory};
use crate::error::{Error, Result};
use crate::graph_policy::{EncoderState, GraphPolicy, INPUT_LIMIT};

/// Anything that maps a stream of normalized joint observations to
/// environment-unit actions, one batch of episodes at a time.
pub trait Controller {
    type Memory;

    fn begin(&self, batch: usize) -> Result<Self::Memory>;

    /// `obs` is `[B * N * d_s]`; returns `[B * N * d_a]`.
    fn act(&self, memory: &mut Self::Memory, obs: &[f64], deterministic: bool, rng: &mut ChaCha8Rng)
        -> Result<Vec<f64>>;
}

impl Controller for GraphPolicy {
    type Memory = (crate::nn::FullGraph, EncoderState);

    fn begin(&self, batch: usize) -> Result<Self::Memory> {
        let graph = self.graph(batch)?;
        let state = self.encoder.initial_state(&graph);
        Ok((graph, state))
    }

    fn act(
        &self,
        memory: &mut Self::Memory,
        obs: &[f64],
        deterministic: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>> {
        let (graph, state) = memory;
        let step = GraphPolicy::act(self, graph, state, obs, deterministic, rng)?;
        *state = step.next_state;
        Ok(step.actions)
    }
}

pub(crate) fn clip_obs(v: &mut [f64]) {
    for x in v {
        *x = x.clamp(-INPUT_LIMIT, INPUT_LIMIT);
    }
}

/// Normalized, clipped observation of a raw joint state.
pub fn observe(norm: &Normalizer, raw: &[f64]) -> Vec<f64> {
    let mut v = norm.normalize(raw);
    clip_obs(&mut v);
    v
}

/// Output of [`collect_rollouts`].
#[derive(Clone, Debug)]
pub struct RolloutBatch {
    /// Raw states fed to the policy and the actions it applied.
    pub trajectories: Vec<Trajectory>,
    /// Same episodes with normalized, clipped states.
    pub normalized: Vec<Trajectory>,
    pub transitions: Vec<Transition>,
    pub plans: Vec<ForcingPlan>,
}

/// Autoregressive rollouts of `policy`, one per reference expert and
/// starting from the reference's first state. After each step an
/// intervention (probability `frequency`) replaces the next fed state by
/// the reference's. All episodes are stepped together as one graph batch.
pub fn collect_rollouts(
    policy: &GraphPolicy,
    env: &dyn Environment,
    norm: &Normalizer,
    references: &[Trajectory],
    frequency: f64,
    deterministic: bool,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutBatch> {
    let spec = env.spec();
    let (n, ds, da, horizon) = (spec.agents, spec.state_dim, spec.action_dim, spec.horizon);
    if references.is_empty() {
        return Err(Error::Empty("rollout references"));
    }
    if policy.cfg.agents != n || policy.cfg.state_dim != ds || policy.cfg.action_dim != da {
        return Err(Error::Config("policy and environment dimensions differ".into()));
    }
    let b = references.len();
    let plans = references
        .iter()
        .map(|r| apply_forcing(frequency, horizon, r.horizon(), rng))
        .collect::<Result<Vec<_>>>()?;
    let graph = policy.graph(b)?;
    let pairs = graph.pairs();
    let hidden = policy.encoder.hidden();
    let mut enc = policy.encoder.initial_state(&graph);
    let mut raw: Vec<Vec<f64>> = references.iter().map(|r| r.state(0).to_vec()).collect();

    let w_s = n * ds;
    let w_a = n * da;
    let mut states = vec![Vec::with_capacity(horizon * w_s); b];
    let mut actions = vec![Vec::with_capacity(horizon * w_a); b];
    let mut normalized = vec![Vec::with_capacity(horizon * w_s); b];
    let mut transitions = Vec::with_capacity(b * horizon);

    for t in 0..horizon {
        let obs: Vec<Vec<f64>> = raw.iter().map(|s| observe(norm, s)).collect();
        let flat: Vec<f64> = obs.concat();
        let step = policy.act(&graph, &enc, &flat, deterministic, rng)?;
        for e in 0..b {
            let a = &step.actions[e * w_a..(e + 1) * w_a];
            let next = env.step(&raw[e], a).map_err(|err| {
                Error::InvalidArgument(format!("episode {e}, step {t}: {err}"))
            })?;
            let (h, c) = enc.graph_slice(e, pairs);
            debug_assert_eq!(h.len(), pairs * hidden);
            transitions.push(Transition {
                obs: obs[e].clone(),
                action: a.to_vec(),
                next_obs: observe(norm, &next),
                done: t + 1 == horizon,
                enc_h: h,
                enc_c: c,
                source: Source::Generated,
            });
            states[e].extend_from_slice(&raw[e]);
            normalized[e].extend_from_slice(&obs[e]);
            actions[e].extend_from_slice(a);
            raw[e] = if plans[e].forced(t) && t + 1 < horizon {
                references[e].state(t + 1).to_vec()
            } else {
                next
            };
        }
        enc = step.next_state;
    }

    let mut trajectories = Vec::with_capacity(b);
    let mut norm_trajs = Vec::with_capacity(b);
    for (e, ((s, a), ns)) in states.into_iter().zip(actions).zip(normalized).enumerate() {
        norm_trajs.push(Trajectory::new(n, ds, da, ns, a.clone(), references[e].mode_tag)?);
        trajectories.push(Trajectory::new(n, ds, da, s, a, None)?);
    }
    Ok(RolloutBatch {
        trajectories,
        normalized: norm_trajs,
        transitions,
        plans,
    })
}

/// Encoder states *before* each step while consuming a batch of
/// observation sequences. `obs[t]` is `[B * N * d_s]`.
pub fn encoder_history(policy: &GraphPolicy, batch: usize, obs: &[Vec<f64>]) -> Result<Vec<EncoderState>> {
    let graph = policy.graph(batch)?;
    let mut state = policy.encoder.initial_state(&graph);
    let mut out = Vec::with_capacity(obs.len());
    for x in obs {
        let mut tape = Tape::new();
        let enc = policy.encoder_params.bind_frozen(&mut tape);
        let xv = tape.constant(&[graph.node_rows(), policy.cfg.state_dim], x.clone())?;
        let step = policy.encoder.step_from(&mut tape, &enc, &graph, &state, xv)?;
        let next = step.state(&tape);
        out.push(std::mem::replace(&mut state, next));
    }
    Ok(out)
}

/// Transitions along interpolated trajectories (normalized states, raw
/// actions). The successor is `s + a·dt` mapped into normalized units, so
/// the pair stays consistent with the integrator dynamics.
pub fn interpolated_transitions(
    policy: &GraphPolicy,
    norm: &Normalizer,
    dt: f64,
    trajs: &[(f64, Trajectory)],
) -> Result<Vec<Transition>> {
    let Some((_, first)) = trajs.first() else {
        return Ok(Vec::new());
    };
    let (n, ds, da, horizon) = (first.agents(), first.state_dim(), first.action_dim(), first.horizon());
    if trajs.iter().any(|(_, t)| !t.same_layout(first)) {
        return Err(Error::InvalidArgument("interpolated trajectories differ in layout".into()));
    }
    let b = trajs.len();
    let obs: Vec<Vec<f64>> = (0..horizon)
        .map(|t| {
            let mut v: Vec<f64> = trajs.iter().flat_map(|(_, tr)| tr.state(t).to_vec()).collect();
            clip_obs(&mut v);
            v
        })
        .collect();
    let history = encoder_history(policy, b, &obs)?;
    let graph = policy.graph(b)?;
    let pairs = graph.pairs();
    let mut out = Vec::with_capacity(b * horizon);
    for (t, enc) in history.iter().enumerate() {
        for (e, (alpha, tr)) in trajs.iter().enumerate() {
            let s = tr.state(t);
            let a = tr.action(t);
            let mut next: Vec<f64> = (0..n * ds)
                .map(|i| {
                    let agent = i / ds;
                    let k = i % ds;
                    let act = if k < da { a[agent * da + k] } else { 0.0 };
                    s[i] + act * dt * norm.scale(k)
                })
                .collect();
            clip_obs(&mut next);
            let (h, c) = enc.graph_slice(e, pairs);
            out.push(Transition {
                obs: obs[t][e * n * ds..(e + 1) * n * ds].to_vec(),
                action: a.to_vec(),
                next_obs: next,
                done: t + 1 == horizon,
                enc_h: h,
                enc_c: c,
                source: Source::Interpolated(*alpha),
            });
        }
    }
    Ok(out)
}

/// Free-running evaluation rollouts of any controller from the references'
/// start states, with optional observation noise. Returns raw trajectories.
pub fn evaluate_controller<C: Controller>(
    ctrl: &C,
    env: &dyn Environment,
    norm: &Normalizer,
    references: &[Trajectory],
    deterministic: bool,
    noise_sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Trajectory>> {
    let spec = env.spec();
    let (n, ds, da) = (spec.agents, spec.state_dim, spec.action_dim);
    let b = references.len();
    let mut mem = ctrl.begin(b)?;
    let mut raw: Vec<Vec<f64>> = references.iter().map(|r| r.state(0).to_vec()).collect();
    let mut states = vec![Vec::new(); b];
    let mut actions = vec![Vec::new(); b];
    for _ in 0..spec.horizon {
        let mut flat: Vec<f64> = raw.iter().flat_map(|s| norm.normalize(s)).collect();
        add_noise(&mut flat, noise_sigma, rng);
        clip_obs(&mut flat);
        let a = ctrl.act(&mut mem, &flat, deterministic, rng)?;
        for e in 0..b {
            let ae = &a[e * n * da..(e + 1) * n * da];
            states[e].extend_from_slice(&raw[e]);
            actions[e].extend_from_slice(ae);
            raw[e] = env.step(&raw[e], ae)?;
        }
    }
    states
        .into_iter()
        .zip(actions)
        .map(|(s, a)| Trajectory::new(n, ds, da, s, a, None))
        .collect()
}

/// Pick `k` references uniformly with replacement.
pub fn sample_references(pool: &[Trajectory], k: usize, rng: &mut impl Rng) -> Vec<Trajectory> {
    (0..k).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect()
}
