use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use super::PolicyConfig;
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::nn::message::aggregate_incoming;
use crate::nn::{node_to_edge, Activation, Bound, FullGraph, Mlp, ParameterSet};

/// Lower bound added to the softplus scale head.
pub const SIGMA_MIN: f64 = 1e-3;

/// Typed graph convolution shared by actor and critic:
/// `h_(i,j) = Σ_{k≥1} z_{ij,k} f_e^k([x_i, x_j])`, aggregated per receiver.
/// Edge type 0 is the null type and carries no message.
#[derive(Clone, Debug)]
struct TypedConv {
    per_type: Vec<Mlp>,
    hidden: usize,
}

impl TypedConv {
    fn new(
        cfg: &PolicyConfig,
        params: &mut ParameterSet,
        prefix: &str,
        node_width: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let act = Activation::Tanh;
        let per_type = (1..cfg.edge_types)
            .map(|k| {
                Mlp::new(
                    params,
                    &format!("{prefix}.f_e{k}"),
                    &cfg.mlp_sizes(2 * node_width, cfg.hidden),
                    act,
                    act,
                    rng,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            per_type,
            hidden: cfg.hidden,
        })
    }

    fn forward(&self, tape: &mut Tape, bound: &Bound, graph: &FullGraph, nodes: Var, z: Var) -> Result<Var> {
        let rows = graph.edge_rows();
        let k = self.per_type.len() + 1;
        if tape.shape(z) != [rows, k] {
            return Err(Error::ShapeMismatch {
                op: "graph_conv",
                left: tape.shape(z).to_vec(),
                right: vec![rows, k],
            });
        }
        let ones = tape.constant(&[1, self.hidden], vec![1.0; self.hidden])?;
        let mut total: Option<Var> = None;
        for (idx, f) in self.per_type.iter().enumerate() {
            let msg = node_to_edge(tape, graph, nodes, None, |t, v| f.forward(t, bound, v))?;
            let zk = tape.narrow(z, 1, idx + 1, 1)?;
            let zk = tape.matmul(zk, ones)?;
            let weighted = tape.mul(zk, msg)?;
            total = Some(match total {
                Some(acc) => tape.add(acc, weighted)?,
                None => weighted,
            });
        }
        let edges = match total {
            Some(e) => e,
            None => tape.constant(&[rows, self.hidden], vec![0.0; rows * self.hidden])?,
        };
        aggregate_incoming(tape, graph, edges)
    }
}

/// Output of one actor pass over a batch of graphs; all nodes `[B * N, ·]`.
#[derive(Clone, Copy, Debug)]
pub struct PolicyOutput {
    pub mu: Var,
    pub sigma: Var,
    /// Pre-squash Gaussian sample `mu + sigma * eps`.
    pub pre_tanh: Var,
    /// `action_bound * tanh(pre_tanh)`.
    pub action: Var,
    /// Per-agent log-density of `action`, `[B * N]`.
    pub log_prob: Var,
}

/// Actor head of the graph soft actor-critic.
#[derive(Clone, Debug)]
pub struct GraphActor {
    conv: TypedConv,
    f_mu: Mlp,
    f_sigma: Mlp,
    action_dim: usize,
    action_bound: f64,
}

impl GraphActor {
    pub fn new(cfg: &PolicyConfig, params: &mut ParameterSet, rng: &mut impl Rng) -> Result<Self> {
        let act = Activation::Tanh;
        Ok(Self {
            conv: TypedConv::new(cfg, params, "act", cfg.state_dim, rng)?,
            f_mu: Mlp::new(params, "act.f_mu", &cfg.mlp_sizes(cfg.hidden, cfg.action_dim), act, Activation::Identity, rng)?,
            f_sigma: Mlp::new(params, "act.f_sigma", &cfg.mlp_sizes(cfg.hidden, cfg.action_dim), act, Activation::Identity, rng)?,
            action_dim: cfg.action_dim,
            action_bound: cfg.action_bound,
        })
    }

    pub fn action_bound(&self) -> f64 {
        self.action_bound
    }

    /// Reparameterized squashed-Gaussian action with tanh log-det correction.
    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        graph: &FullGraph,
        x: Var,
        z: Var,
        rng: &mut impl Rng,
    ) -> Result<PolicyOutput> {
        let rows = graph.node_rows() * self.action_dim;
        let eps: Vec<f64> = (0..rows).map(|_| rng.sample(StandardNormal)).collect();
        self.forward_with_noise(tape, bound, graph, x, z, &eps)
    }

    pub fn forward_with_noise(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        graph: &FullGraph,
        x: Var,
        z: Var,
        eps: &[f64],
    ) -> Result<PolicyOutput> {
        let (mu, sigma) = self.distribution(tape, bound, graph, x, z)?;
        let shape = tape.shape(mu).to_vec();
        let eps_v = tape.constant(&shape, eps.to_vec())?;
        let noise = tape.mul(sigma, eps_v)?;
        let pre_tanh = tape.add(mu, noise)?;
        let squashed = tape.tanh(pre_tanh);
        let action = tape.scale(squashed, self.action_bound);

        // log N(u; mu, sigma) = -eps²/2 - log sigma - log(2π)/2
        let log_sigma = tape.log(sigma)?;
        let half_eps2: Vec<f64> = eps.iter().map(|e| -0.5 * e * e - 0.5 * (2.0 * PI).ln()).collect();
        let base = tape.constant(&shape, half_eps2)?;
        let gauss = tape.sub(base, log_sigma)?;
        // log |d action / du| = log bound + 2 (ln 2 - u - softplus(-2u))
        let neg2u = tape.scale(pre_tanh, -2.0);
        let sp = tape.softplus(neg2u);
        let u_plus_sp = tape.add(pre_tanh, sp)?;
        let log_det = tape.affine(u_plus_sp, -2.0, 2.0 * LN_2 + self.action_bound.ln());
        let per_dim = tape.sub(gauss, log_det)?;
        let log_prob = tape.sum(per_dim, Some(1))?;
        Ok(PolicyOutput {
            mu,
            sigma,
            pre_tanh,
            action,
            log_prob,
        })
    }

    /// Mean and scale heads: `mu_j = f_mu(agg_j)`, `sigma_j = softplus(f_sigma(agg_j)) + SIGMA_MIN`.
    pub fn distribution(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        graph: &FullGraph,
        x: Var,
        z: Var,
    ) -> Result<(Var, Var)> {
        let agg = self.conv.forward(tape, bound, graph, x, z)?;
        let mu = self.f_mu.forward(tape, bound, agg)?;
        let raw = self.f_sigma.forward(tape, bound, agg)?;
        let sp = tape.softplus(raw);
        let sigma = tape.affine(sp, 1.0, SIGMA_MIN);
        if tape.value(mu).iter().chain(tape.value(sigma)).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("policy head"));
        }
        Ok((mu, sigma))
    }

    /// Deterministic action `bound * tanh(mu)`.
    pub fn mean_action(&self, tape: &mut Tape, bound: &Bound, graph: &FullGraph, x: Var, z: Var) -> Result<Var> {
        let (mu, _) = self.distribution(tape, bound, graph, x, z)?;
        let t = tape.tanh(mu);
        Ok(tape.scale(t, self.action_bound))
    }
}

/// Critic head: the same typed graph convolution over `[x_j, a_j / bound]`
/// node features, a per-agent Q head, and the mean over agents as the joint Q.
#[derive(Clone, Debug)]
pub struct GraphCritic {
    conv: TypedConv,
    f_q: Mlp,
    action_dim: usize,
    action_bound: f64,
}

impl GraphCritic {
    pub fn new(cfg: &PolicyConfig, params: &mut ParameterSet, rng: &mut impl Rng) -> Result<Self> {
        let node_width = cfg.state_dim + cfg.action_dim;
        Ok(Self {
            conv: TypedConv::new(cfg, params, "q", node_width, rng)?,
            f_q: Mlp::new(params, "q.f_q", &cfg.mlp_sizes(cfg.hidden, 1), Activation::Tanh, Activation::Identity, rng)?,
            action_dim: cfg.action_dim,
            action_bound: cfg.action_bound,
        })
    }

    /// Per-agent Q values `[B * N, 1]`.
    pub fn per_agent(&self, tape: &mut Tape, bound: &Bound, graph: &FullGraph, x: Var, z: Var, a: Var) -> Result<Var> {
        if tape.shape(a) != [graph.node_rows(), self.action_dim] {
            return Err(Error::ShapeMismatch {
                op: "critic_q",
                left: tape.shape(a).to_vec(),
                right: vec![graph.node_rows(), self.action_dim],
            });
        }
        let a_scaled = tape.scale(a, 1.0 / self.action_bound);
        let nodes = tape.concat(&[x, a_scaled], 1)?;
        let agg = self.conv.forward(tape, bound, graph, nodes, z)?;
        self.f_q.forward(tape, bound, agg)
    }

    /// Joint Q per graph `[B]`: mean of the per-agent heads.
    pub fn forward(&self, tape: &mut Tape, bound: &Bound, graph: &FullGraph, x: Var, z: Var, a: Var) -> Result<Var> {
        let q = self.per_agent(tape, bound, graph, x, z, a)?;
        let q = tape.reshape(q, &[graph.batch(), graph.nodes()])?;
        tape.mean(q, Some(1))
    }
}
