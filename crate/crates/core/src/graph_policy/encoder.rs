use rand::Rng;
use rand_distr::{Distribution, Gumbel};

use super::PolicyConfig;
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::nn::{edge_to_node, node_to_edge, Activation, Bound, FullGraph, LstmCell, Mlp, ParameterSet};

/// Normalized observations beyond this magnitude are rejected. The slack
/// over [-1, 1] absorbs evaluation noise.
pub const INPUT_LIMIT: f64 = 1.5;

/// Per-pair recurrent state of the graph encoder, `[B * pairs, hidden]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderState {
    pub h: Tensor,
    pub c: Tensor,
}

impl EncoderState {
    pub fn zeros(edge_rows: usize, hidden: usize) -> Self {
        Self {
            h: Tensor::zeros(&[edge_rows, hidden]),
            c: Tensor::zeros(&[edge_rows, hidden]),
        }
    }

    pub fn rows(&self) -> usize {
        self.h.shape()[0]
    }

    /// State rows of one graph of the batch, flattened `h` then `c`.
    pub fn graph_slice(&self, graph: usize, pairs: usize) -> (Vec<f64>, Vec<f64>) {
        let w = self.h.shape()[1];
        let range = graph * pairs * w..(graph + 1) * pairs * w;
        (self.h.data()[range.clone()].to_vec(), self.c.data()[range].to_vec())
    }

    /// Stack per-graph slices back into a batch state.
    pub fn from_slices<'a>(
        slices: impl Iterator<Item = (&'a [f64], &'a [f64])>,
        hidden: usize,
    ) -> Result<Self> {
        let (mut h, mut c) = (Vec::new(), Vec::new());
        for (hs, cs) in slices {
            h.extend_from_slice(hs);
            c.extend_from_slice(cs);
        }
        let rows = h.len() / hidden;
        Ok(Self {
            h: Tensor::new(vec![rows, hidden], h)?,
            c: Tensor::new(vec![rows, hidden], c)?,
        })
    }
}

/// Edge-type distribution for every ordered pair of a batch of graphs.
#[derive(Clone, Copy, Debug)]
pub struct InteractionGraphSample {
    /// `[B * pairs, K]`
    pub logits: Var,
    /// Softmax of `logits` over the edge types.
    pub probs: Var,
    pub temperature: f64,
}

/// Tape handles of the encoder's recurrent state after a step.
#[derive(Clone, Copy, Debug)]
pub struct EncoderStep {
    pub h: Var,
    pub c: Var,
    pub graph: InteractionGraphSample,
}

impl EncoderStep {
    pub fn state(&self, tape: &Tape) -> EncoderState {
        EncoderState {
            h: tape.to_tensor(self.h),
            c: tape.to_tensor(self.c),
        }
    }
}

/// Graph encoder: one node→edge→node→edge message-passing round over the
/// current observation, an LSTM per ordered pair, and a softmax head over
/// the edge types. There is no prior network; the edge distribution is a
/// function of the observed history only.
#[derive(Clone, Debug)]
pub struct GraphEncoder {
    f_e1: Mlp,
    f_v: Mlp,
    f_e2: Mlp,
    lstm: LstmCell,
    f_out: Mlp,
    hidden: usize,
    temperature: f64,
}

impl GraphEncoder {
    pub fn new(cfg: &PolicyConfig, params: &mut ParameterSet, rng: &mut impl Rng) -> Result<Self> {
        let (ds, h, k) = (cfg.state_dim, cfg.hidden, cfg.edge_types);
        let act = Activation::Tanh;
        Ok(Self {
            f_e1: Mlp::new(params, "enc.f_e1", &cfg.mlp_sizes(2 * ds, h), act, act, rng)?,
            f_v: Mlp::new(params, "enc.f_v", &cfg.mlp_sizes(h + ds, h), act, act, rng)?,
            f_e2: Mlp::new(params, "enc.f_e2", &cfg.mlp_sizes(2 * h, h), act, act, rng)?,
            lstm: LstmCell::new(params, "enc.lstm", h, h, rng)?,
            f_out: Mlp::new(params, "enc.f_out", &cfg.mlp_sizes(h, k), act, Activation::Identity, rng)?,
            hidden: h,
            temperature: cfg.temperature,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn initial_state(&self, graph: &FullGraph) -> EncoderState {
        EncoderState::zeros(graph.edge_rows(), self.hidden)
    }

    /// Consume one observation `x [B * N, d]` and return the updated state
    /// with the per-pair edge-type distribution.
    pub fn step(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        graph: &FullGraph,
        h: Var,
        c: Var,
        x: Var,
    ) -> Result<EncoderStep> {
        if let Some(&bad) = tape.value(x).iter().find(|v| !(v.abs() <= INPUT_LIMIT)) {
            return Err(Error::OutOfRange(bad));
        }
        let e1 = node_to_edge(tape, graph, x, None, |t, v| self.f_e1.forward(t, bound, v))?;
        let v1 = edge_to_node(tape, graph, e1, Some(x), |t, v| self.f_v.forward(t, bound, v))?;
        let e2 = node_to_edge(tape, graph, v1, None, |t, v| self.f_e2.forward(t, bound, v))?;
        let (h2, c2) = self.lstm.step(tape, bound, e2, h, c)?;
        let logits = self.f_out.forward(tape, bound, h2)?;
        let probs = tape.softmax(logits, 1)?;
        Ok(EncoderStep {
            h: h2,
            c: c2,
            graph: InteractionGraphSample {
                logits,
                probs,
                temperature: self.temperature,
            },
        })
    }

    /// [`step`](Self::step) from a stored state.
    pub fn step_from(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        graph: &FullGraph,
        state: &EncoderState,
        x: Var,
    ) -> Result<EncoderStep> {
        let h = tape.leaf(&state.h);
        let c = tape.leaf(&state.c);
        self.step(tape, bound, graph, h, c, x)
    }
}

/// Concrete (Gumbel-softmax) relaxation of a draw from `dist`. With `hard`,
/// the forward value is the one-hot argmax while gradients follow the
/// relaxed sample (straight-through).
pub fn sample_edges(
    tape: &mut Tape,
    dist: &InteractionGraphSample,
    hard: bool,
    rng: &mut impl Rng,
) -> Result<Var> {
    if !(dist.temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {}",
            dist.temperature
        )));
    }
    let shape = tape.shape(dist.logits).to_vec();
    let gumbel = Gumbel::new(0.0, 1.0).expect("unit gumbel");
    let noise: Vec<f64> = (0..shape.iter().product()).map(|_| gumbel.sample(rng)).collect();
    let noise = tape.constant(&shape, noise)?;
    let perturbed = tape.add(dist.logits, noise)?;
    let scaled = tape.scale(perturbed, 1.0 / dist.temperature);
    let soft = tape.softmax(scaled, 1)?;
    if !hard {
        return Ok(soft);
    }
    let k = shape[1];
    let mut onehot = vec![0.0; tape.value(soft).len()];
    for (row, vals) in tape.value(soft).chunks(k).enumerate() {
        let arg = vals
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > vals[best] { i } else { best });
        onehot[row * k + arg] = 1.0;
    }
    // one_hot + (soft - stop_grad(soft))
    let frozen = tape.detach(soft);
    let diff = tape.sub(soft, frozen)?;
    let hard_v = tape.constant(&shape, onehot)?;
    tape.add(hard_v, diff)
}
