//! Adversarial objectives over joint state-action pairs: the
//! self-supervised MSE regression onto interpolation labels, plus the
//! GAIL cross-entropy and Wasserstein (gradient-penalty) baselines.
//!
//! `alpha` is the expert weight throughout: `tau_alpha = (1 - alpha) tau_G
//! + alpha tau_E`, so `alpha = 0` is the generated endpoint (label 0) and
//! `alpha = 1` the expert (label 1). Past the expert the label drops to 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::envs::Trajectory;
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamState, Bound, Mlp, ParameterSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// `[0, 1]`
    PositiveUnit,
    /// `[-1, 1]`
    Symmetric,
    /// `[-1, 1.5]`
    Extended,
}

impl AlphaMode {
    pub fn range(self) -> (f64, f64) {
        match self {
            AlphaMode::PositiveUnit => (0.0, 1.0),
            AlphaMode::Symmetric => (-1.0, 1.0),
            AlphaMode::Extended => (-1.0, 1.5),
        }
    }
}

/// Uniform sampler of interpolation weights.
#[derive(Clone, Debug)]
pub struct AlphaSampler {
    mode: AlphaMode,
    rng: ChaCha8Rng,
}

impl AlphaSampler {
    pub fn new(mode: AlphaMode, seed: u64) -> Self {
        Self {
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn mode(&self) -> AlphaMode {
        self.mode
    }

    pub fn sample(&mut self) -> f64 {
        let (lo, hi) = self.mode.range();
        self.rng.gen_range(lo..=hi)
    }
}

/// Regression target for an interpolation weight: `alpha` up to the
/// expert, 0 beyond it.
pub fn ss_label(alpha: f64) -> f64 {
    if alpha <= 1.0 {
        alpha
    } else {
        0.0
    }
}

/// A labelled interpolated trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolatedBatch {
    pub alpha: f64,
    pub label: f64,
    pub trajectory: Trajectory,
}

/// `(1 - alpha) tau_g + alpha tau_e` on states and actions. A longer expert
/// is truncated to the generated horizon.
pub fn interpolate(tau_g: &Trajectory, tau_e: &Trajectory, alpha: f64) -> Result<InterpolatedBatch> {
    let horizon = tau_g.horizon();
    if tau_e.horizon() < horizon {
        return Err(Error::InvalidArgument(format!(
            "expert horizon {} shorter than generated {horizon}",
            tau_e.horizon()
        )));
    }
    let tau_e = if tau_e.horizon() > horizon {
        tau_e.truncated(horizon)?
    } else {
        tau_e.clone()
    };
    if !tau_g.same_layout(&tau_e) {
        return Err(Error::ShapeMismatch {
            op: "interpolate",
            left: vec![tau_g.horizon(), tau_g.agents(), tau_g.state_dim(), tau_g.action_dim()],
            right: vec![tau_e.horizon(), tau_e.agents(), tau_e.state_dim(), tau_e.action_dim()],
        });
    }
    let mix = |g: &[f64], e: &[f64]| -> Vec<f64> {
        if alpha == 0.0 {
            return g.to_vec();
        }
        if alpha == 1.0 {
            return e.to_vec();
        }
        g.iter().zip(e).map(|(g, e)| (1.0 - alpha) * g + alpha * e).collect()
    };
    let trajectory = Trajectory::new(
        tau_g.agents(),
        tau_g.state_dim(),
        tau_g.action_dim(),
        mix(tau_g.states(), tau_e.states()),
        mix(tau_g.actions(), tau_e.actions()),
        None,
    )?;
    Ok(InterpolatedBatch {
        alpha,
        label: ss_label(alpha),
        trajectory,
    })
}

/// Rows of joint `(s, a)` pairs, one per timestep, with optional targets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleBatch {
    pub state_width: usize,
    pub action_width: usize,
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    pub labels: Vec<f64>,
}

impl SampleBatch {
    pub fn new(state_width: usize, action_width: usize) -> Self {
        Self {
            state_width,
            action_width,
            ..Self::default()
        }
    }

    pub fn rows(&self) -> usize {
        if self.state_width == 0 {
            0
        } else {
            self.states.len() / self.state_width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0
    }

    pub fn push(&mut self, s: &[f64], a: &[f64], label: f64) {
        debug_assert_eq!(s.len(), self.state_width);
        debug_assert_eq!(a.len(), self.action_width);
        self.states.extend_from_slice(s);
        self.actions.extend_from_slice(a);
        self.labels.push(label);
    }

    /// Every timestep of every trajectory, all labelled `label`.
    pub fn from_trajectories<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>, label: f64) -> Self {
        let mut out: Option<SampleBatch> = None;
        for tr in trajs {
            let b = out.get_or_insert_with(|| {
                SampleBatch::new(tr.agents() * tr.state_dim(), tr.agents() * tr.action_dim())
            });
            for t in 0..tr.horizon() {
                b.push(tr.state(t), tr.action(t), label);
            }
        }
        out.unwrap_or_default()
    }

    /// Every timestep of the interpolated trajectories, labelled per batch.
    pub fn from_interpolated(batches: &[InterpolatedBatch]) -> Self {
        let mut out: Option<SampleBatch> = None;
        for ib in batches {
            let tr = &ib.trajectory;
            let b = out.get_or_insert_with(|| {
                SampleBatch::new(tr.agents() * tr.state_dim(), tr.agents() * tr.action_dim())
            });
            for t in 0..tr.horizon() {
                b.push(tr.state(t), tr.action(t), ib.label);
            }
        }
        out.unwrap_or_default()
    }

    /// `n` rows drawn uniformly with replacement.
    pub fn sample_rows(&self, n: usize, rng: &mut impl Rng) -> Result<Self> {
        if self.is_empty() {
            return Err(Error::Empty("sample batch"));
        }
        let mut out = SampleBatch::new(self.state_width, self.action_width);
        for _ in 0..n {
            let r = rng.gen_range(0..self.rows());
            out.push(
                &self.states[r * self.state_width..(r + 1) * self.state_width],
                &self.actions[r * self.action_width..(r + 1) * self.action_width],
                self.labels[r],
            );
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    SsMse,
    GailBce,
    Wasserstein,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscConfig {
    pub objective: Objective,
    pub hidden: Vec<usize>,
    /// Gradient-penalty weight, Wasserstein only.
    pub gp_coeff: f64,
}

impl Default for DiscConfig {
    fn default() -> Self {
        Self {
            objective: Objective::SsMse,
            hidden: vec![64, 64],
            gp_coeff: 10.0,
        }
    }
}

impl DiscConfig {
    /// Output squashing implied by the objective.
    pub fn output_activation(&self) -> Activation {
        match self.objective {
            Objective::GailBce => Activation::Sigmoid,
            Objective::SsMse | Objective::Wasserstein => Activation::Identity,
        }
    }
}

/// Centralized discriminator over the concatenated states and actions of
/// all agents at one timestep. Actions are divided by the action bound
/// before entering the network.
#[derive(Clone, Debug)]
pub struct Discriminator {
    pub cfg: DiscConfig,
    pub params: ParameterSet,
    net: Mlp,
    state_width: usize,
    action_width: usize,
    action_scale: f64,
}

impl Discriminator {
    pub fn new(
        cfg: DiscConfig,
        state_width: usize,
        action_width: usize,
        action_bound: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(action_bound > 0.0) {
            return Err(Error::Config("action bound must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParameterSet::new();
        let mut sizes = vec![state_width + action_width];
        sizes.extend(&cfg.hidden);
        sizes.push(1);
        // The logit head is linear; the sigmoid is applied in `forward`.
        let net = Mlp::new(&mut params, "disc", &sizes, Activation::Relu, Activation::Identity, &mut rng)?;
        Ok(Self {
            cfg,
            params,
            net,
            state_width,
            action_width,
            action_scale: 1.0 / action_bound,
        })
    }

    pub fn objective(&self) -> Objective {
        self.cfg.objective
    }

    pub fn input_width(&self) -> usize {
        self.state_width + self.action_width
    }

    /// Network input `[B, state_width + action_width]` for a batch.
    pub fn input(&self, tape: &mut Tape, batch: &SampleBatch) -> Result<Var> {
        if batch.state_width != self.state_width || batch.action_width != self.action_width {
            return Err(Error::ShapeMismatch {
                op: "discriminator input",
                left: vec![batch.state_width, batch.action_width],
                right: vec![self.state_width, self.action_width],
            });
        }
        if batch.is_empty() {
            return Err(Error::Empty("discriminator batch"));
        }
        let rows = batch.rows();
        let mut data = Vec::with_capacity(rows * self.input_width());
        for r in 0..rows {
            data.extend_from_slice(&batch.states[r * self.state_width..(r + 1) * self.state_width]);
            data.extend(
                batch.actions[r * self.action_width..(r + 1) * self.action_width]
                    .iter()
                    .map(|a| a * self.action_scale),
            );
        }
        tape.constant(&[rows, self.input_width()], data)
    }

    /// Pre-activation score `[B, 1]`.
    pub fn logits(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var> {
        let out = self.net.forward(tape, bound, x)?;
        if tape.value(out).iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite("discriminator output"));
        }
        Ok(out)
    }

    /// `D(s, a)` `[B, 1]`: linear for ss_mse / wasserstein, sigmoid for gail_bce.
    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var> {
        let l = self.logits(tape, bound, x)?;
        Ok(self.cfg.output_activation().apply(tape, l))
    }

    /// No-grad scores of a batch.
    pub fn score(&self, batch: &SampleBatch) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let bound = self.params.bind_frozen(&mut tape);
        let x = self.input(&mut tape, batch)?;
        let d = self.forward(&mut tape, &bound, x)?;
        Ok(tape.value(d).to_vec())
    }

    /// Policy reward for each row: `D` for ss_mse and wasserstein,
    /// `-log D` for gail_bce (D is the probability of "generated").
    pub fn reward(&self, batch: &SampleBatch) -> Result<Vec<f64>> {
        match self.cfg.objective {
            Objective::SsMse | Objective::Wasserstein => self.score(batch),
            Objective::GailBce => {
                let mut tape = Tape::new();
                let bound = self.params.bind_frozen(&mut tape);
                let x = self.input(&mut tape, batch)?;
                let l = self.logits(&mut tape, &bound, x)?;
                // -log sigmoid(l) = softplus(-l)
                Ok(tape.value(l).iter().map(|&v| softplus(-v)).collect())
            }
        }
    }

    /// Loss of the configured objective on one set of batches.
    pub fn loss(&self, tape: &mut Tape, bound: &Bound, batches: &DiscBatches, rng: &mut impl Rng) -> Result<Var> {
        match self.cfg.objective {
            Objective::SsMse => ss_loss(tape, self, bound, &batches.generated, &batches.expert, &batches.interpolated),
            Objective::GailBce => gail_bce_loss(tape, self, bound, &batches.generated, &batches.expert),
            Objective::Wasserstein => {
                wasserstein_loss(tape, self, bound, &batches.generated, &batches.expert, self.cfg.gp_coeff, rng)
            }
        }
    }

    /// One Adam step on the configured loss; returns the loss value.
    pub fn update(&mut self, adam: &mut AdamState, batches: &DiscBatches, rng: &mut impl Rng) -> Result<f64> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let loss = self.loss(&mut tape, &bound, batches, rng)?;
        let value = tape.item(loss);
        tape.backward(loss)?;
        self.params.accumulate_grads(&tape, &bound);
        adam.step(&mut self.params)?;
        Ok(value)
    }

    pub(crate) fn net(&self) -> &Mlp {
        &self.net
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Inputs of one discriminator step.
#[derive(Clone, Debug, Default)]
pub struct DiscBatches {
    pub generated: SampleBatch,
    pub expert: SampleBatch,
    /// Labelled interpolations (ss_mse only).
    pub interpolated: SampleBatch,
}

fn mean_squared_to(tape: &mut Tape, d: Var, targets: &[f64]) -> Result<Var> {
    let t = tape.constant(&[targets.len(), 1], targets.to_vec())?;
    let diff = tape.sub(t, d)?;
    let sq = tape.square(diff);
    tape.mean(sq, None)
}

/// `mean (0 - D_G)^2 + mean (1 - D_E)^2 + mean (label - D_alpha)^2`.
pub fn ss_loss(
    tape: &mut Tape,
    disc: &Discriminator,
    bound: &Bound,
    generated: &SampleBatch,
    expert: &SampleBatch,
    interpolated: &SampleBatch,
) -> Result<Var> {
    if generated.is_empty() || expert.is_empty() || interpolated.is_empty() {
        return Err(Error::Empty("ss_loss batch"));
    }
    let mut terms = Vec::with_capacity(3);
    for (batch, targets) in [
        (generated, vec![0.0; generated.rows()]),
        (expert, vec![1.0; expert.rows()]),
        (interpolated, interpolated.labels.clone()),
    ] {
        let x = disc.input(tape, batch)?;
        let d = disc.forward(tape, bound, x)?;
        terms.push(mean_squared_to(tape, d, &targets)?);
    }
    let s = tape.add(terms[0], terms[1])?;
    tape.add(s, terms[2])
}

/// The GAIL maximand `E_gen[log D] + E_exp[log(1 - D)]`, computed from
/// logits for stability.
pub fn gail_objective(
    tape: &mut Tape,
    disc: &Discriminator,
    bound: &Bound,
    generated: &SampleBatch,
    expert: &SampleBatch,
) -> Result<Var> {
    if generated.is_empty() || expert.is_empty() {
        return Err(Error::Empty("gail batch"));
    }
    let xg = disc.input(tape, generated)?;
    let lg = disc.logits(tape, bound, xg)?;
    let xe = disc.input(tape, expert)?;
    let le = disc.logits(tape, bound, xe)?;
    // log sigmoid(l) = -softplus(-l); log(1 - sigmoid(l)) = -softplus(l)
    let neg = tape.neg(lg);
    let sg = tape.softplus(neg);
    let log_d_gen = tape.mean(sg, None)?;
    let se = tape.softplus(le);
    let log_1m_d_exp = tape.mean(se, None)?;
    let total = tape.add(log_d_gen, log_1m_d_exp)?;
    Ok(tape.neg(total))
}

/// Negated GAIL maximand, minimized by the discriminator.
pub fn gail_bce_loss(
    tape: &mut Tape,
    disc: &Discriminator,
    bound: &Bound,
    generated: &SampleBatch,
    expert: &SampleBatch,
) -> Result<Var> {
    let obj = gail_objective(tape, disc, bound, generated, expert)?;
    Ok(tape.neg(obj))
}

/// `E_gen[D] - E_exp[D] + gp * E[(|grad_x D(x_hat)| - 1)^2]` with `x_hat`
/// drawn on segments between paired generated and expert rows.
pub fn wasserstein_loss(
    tape: &mut Tape,
    disc: &Discriminator,
    bound: &Bound,
    generated: &SampleBatch,
    expert: &SampleBatch,
    gp_coeff: f64,
    rng: &mut impl Rng,
) -> Result<Var> {
    if generated.is_empty() || expert.is_empty() {
        return Err(Error::Empty("wasserstein batch"));
    }
    let xg = disc.input(tape, generated)?;
    let dg = disc.forward(tape, bound, xg)?;
    let mg = tape.mean(dg, None)?;
    let xe = disc.input(tape, expert)?;
    let de = disc.forward(tape, bound, xe)?;
    let me = tape.mean(de, None)?;
    let critic = tape.sub(mg, me)?;
    if gp_coeff == 0.0 {
        return Ok(critic);
    }

    let rows = generated.rows();
    let width = disc.input_width();
    let (g, e) = (tape.value(xg).to_vec(), tape.value(xe).to_vec());
    let er = expert.rows();
    let mut hat = Vec::with_capacity(rows * width);
    for r in 0..rows {
        let eps: f64 = rng.gen();
        let re = r % er;
        for k in 0..width {
            hat.push(eps * g[r * width + k] + (1.0 - eps) * e[re * width + k]);
        }
    }
    let xh = tape.constant(&[rows, width], hat)?;
    let grad = disc.net().input_gradient(tape, bound, xh)?;
    let sq = tape.square(grad);
    let sumsq = tape.sum(sq, Some(1))?;
    // |g| = exp(log(|g|^2 + tiny) / 2); the floor keeps log defined at g = 0.
    let floored = tape.affine(sumsq, 1.0, 1e-12);
    let log = tape.log(floored)?;
    let half = tape.scale(log, 0.5);
    let norm = tape.exp(half);
    let dev = tape.affine(norm, 1.0, -1.0);
    let dev2 = tape.square(dev);
    let pen = tape.mean(dev2, None)?;
    let pen = tape.scale(pen, gp_coeff);
    tape.add(critic, pen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::AdamConfig;

    fn traj(states: Vec<f64>, actions: Vec<f64>) -> Trajectory {
        Trajectory::new(1, 2, 2, states, actions, None).unwrap()
    }

    fn zero_disc(obj: Objective) -> Discriminator {
        let cfg = DiscConfig {
            objective: obj,
            hidden: vec![4],
            gp_coeff: 10.0,
        };
        let mut d = Discriminator::new(cfg, 2, 2, 2.0, 0).unwrap();
        for (_, t) in d.params.iter_mut() {
            t.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        d
    }

    /// Constant output `c` everywhere: zero weights, final bias `c`.
    fn constant_disc(obj: Objective, c: f64) -> Discriminator {
        let mut d = zero_disc(obj);
        d.params.get_mut("disc.l1.b").unwrap().data_mut()[0] = c;
        d
    }

    fn one_row(s: [f64; 2], label: f64) -> SampleBatch {
        let mut b = SampleBatch::new(2, 2);
        b.push(&s, &[0.0, 0.0], label);
        b
    }

    #[test]
    fn interpolate_midpoint_and_endpoints() {
        let g = traj(vec![0.0, 0.0], vec![0.0, 0.0]);
        let e = traj(vec![2.0, 2.0], vec![1.0, 1.0]);
        assert_eq!(interpolate(&g, &e, 0.5).unwrap().trajectory.states(), &[1.0, 1.0]);
        assert_eq!(interpolate(&g, &e, 0.0).unwrap().trajectory.states(), g.states());
        assert_eq!(interpolate(&g, &e, 1.0).unwrap().trajectory.states(), e.states());
        assert_eq!(interpolate(&g, &e, -1.0).unwrap().trajectory.states(), &[-2.0, -2.0]);
    }

    #[test]
    fn interpolate_truncates_long_expert_and_rejects_short() {
        let g = traj(vec![0.0; 4], vec![0.0; 4]);
        let e = traj(vec![1.0; 6], vec![0.0; 6]);
        assert_eq!(interpolate(&g, &e, 0.5).unwrap().trajectory.horizon(), 2);
        assert!(interpolate(&e, &g, 0.5).is_err());
    }

    #[test]
    fn label_rule() {
        assert_eq!(ss_label(0.5), 0.5);
        assert_eq!(ss_label(1.0), 1.0);
        assert_eq!(ss_label(1.25), 0.0);
        assert_eq!(ss_label(-0.5), -0.5);
    }

    #[test]
    fn sampler_respects_ranges() {
        for mode in [AlphaMode::PositiveUnit, AlphaMode::Symmetric, AlphaMode::Extended] {
            let (lo, hi) = mode.range();
            let mut s = AlphaSampler::new(mode, 1);
            for _ in 0..1000 {
                let a = s.sample();
                assert!((lo..=hi).contains(&a));
            }
        }
    }

    #[test]
    fn zero_network_scores() {
        let b = one_row([0.3, -0.2], 0.0);
        assert_eq!(zero_disc(Objective::SsMse).score(&b).unwrap(), vec![0.0]);
        assert_eq!(zero_disc(Objective::GailBce).score(&b).unwrap(), vec![0.5]);
    }

    #[test]
    fn ss_loss_constant_half() {
        let d = constant_disc(Objective::SsMse, 0.5);
        let mut tape = Tape::new();
        let bound = d.params.bind(&mut tape);
        let loss = ss_loss(
            &mut tape,
            &d,
            &bound,
            &one_row([0.0, 0.0], 0.0),
            &one_row([1.0, 1.0], 1.0),
            &one_row([0.5, 0.5], 0.5),
        )
        .unwrap();
        assert_eq!(tape.item(loss), 0.5);
    }

    #[test]
    fn ss_loss_empty_rejected() {
        let d = zero_disc(Objective::SsMse);
        let mut tape = Tape::new();
        let bound = d.params.bind(&mut tape);
        let empty = SampleBatch::new(2, 2);
        assert!(ss_loss(&mut tape, &d, &bound, &empty, &one_row([0.0, 0.0], 1.0), &one_row([0.0, 0.0], 1.0)).is_err());
    }

    #[test]
    fn gail_at_half_is_two_log_half() {
        let d = zero_disc(Objective::GailBce);
        let mut tape = Tape::new();
        let bound = d.params.bind(&mut tape);
        let obj = gail_objective(&mut tape, &d, &bound, &one_row([0.0, 1.0], 0.0), &one_row([1.0, 0.0], 1.0)).unwrap();
        assert!((tape.item(obj) - 2.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_constant_is_penalty_only() {
        let d = constant_disc(Objective::Wasserstein, 0.7);
        let mut tape = Tape::new();
        let bound = d.params.bind(&mut tape);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let loss = wasserstein_loss(
            &mut tape,
            &d,
            &bound,
            &one_row([0.0, 1.0], 0.0),
            &one_row([1.0, 0.0], 1.0),
            10.0,
            &mut rng,
        )
        .unwrap();
        assert!((tape.item(loss) - 10.0).abs() < 1e-4, "{}", tape.item(loss));
    }

    #[test]
    fn identical_batches_cancel_without_penalty() {
        let d = Discriminator::new(
            DiscConfig {
                objective: Objective::Wasserstein,
                hidden: vec![8],
                gp_coeff: 0.0,
            },
            2,
            2,
            2.0,
            3,
        )
        .unwrap();
        let b = one_row([0.4, -0.9], 0.0);
        let mut tape = Tape::new();
        let bound = d.params.bind(&mut tape);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let loss = wasserstein_loss(&mut tape, &d, &bound, &b, &b, 0.0, &mut rng).unwrap();
        assert_eq!(tape.item(loss), 0.0);
    }

    #[test]
    fn gail_training_reduces_loss() {
        let cfg = DiscConfig {
            objective: Objective::GailBce,
            hidden: vec![8],
            gp_coeff: 0.0,
        };
        let mut d = Discriminator::new(cfg, 2, 2, 2.0, 5).unwrap();
        let mut adam = AdamState::new(&d.params, AdamConfig::with_lr(1e-2));
        let batches = DiscBatches {
            generated: one_row([-1.0, -1.0], 0.0),
            expert: one_row([1.0, 1.0], 1.0),
            interpolated: SampleBatch::default(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let first = d.update(&mut adam, &batches, &mut rng).unwrap();
        let mut last = first;
        for _ in 0..500 {
            last = d.update(&mut adam, &batches, &mut rng).unwrap();
        }
        assert!(last < first);
        let s = d.score(&batches.generated).unwrap()[0];
        assert!(s > 0.0 && s < 1.0 && s > 0.5);
    }
}
