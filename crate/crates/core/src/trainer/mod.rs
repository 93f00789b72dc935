//! The adversarial imitation loop: rollouts (with trajectory forcing),
//! discriminator epochs, SAC updates over generated and interpolated
//! transitions, evaluation, checkpoints, and the experiment drivers behind
//! the `train`, `eval`, `landscape` and `ablate` commands.

mod bc;
mod buffer;
mod landscape;
mod metrics;
mod rollout;
mod sac;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bc::{bc_baseline_train, bc_step, BcConfig, BcReport};
pub use buffer::{ReplayBuffer, Source, Transition};
pub use landscape::{landscape_grid, write_landscape, GridPoint, LandscapeSlice, Region};
pub use metrics::{
    compounding_error, endpoint_distance, mode_coverage, paired_error, slope, training_error, write_metrics,
    MetricsRow, ModeCoverage, METRICS_HEADER,
};
pub use rollout::{
    collect_rollouts, encoder_history, evaluate_controller, interpolated_transitions, observe, sample_references,
    Controller, RolloutBatch,
};
pub use sac::{critic_target, sac_step, sac_update, SacBatch, SacConfig, SacOptim, SacStats};

use crate::curriculum::{CurriculumSchedule, Forcing, DEFAULT_BASE};
use crate::discriminator::{
    interpolate, AlphaMode, AlphaSampler, DiscBatches, DiscConfig, Discriminator, Objective, SampleBatch,
};
use crate::envs::{
    read_trajectories, EnvSpec, Environment, LetterSpec, Letters, Normalizer, RecordedEnv, Trajectory, YJunction,
    YJunctionConfig,
};
use crate::error::{Error, Result};
use crate::graph_policy::{GraphPolicy, PolicyConfig};
use crate::nn::{checkpoint, AdamConfig, AdamState, ParameterSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvConfig {
    YJunction(YJunctionConfig),
    Letters {
        #[serde(default = "letters_horizon")]
        horizon: usize,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default = "default_bound")]
        action_bound: f64,
    },
    /// Expert trajectories from a CSV file, replayed under the integrator.
    File {
        path: PathBuf,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default = "default_bound")]
        action_bound: f64,
    },
}

fn letters_horizon() -> usize {
    51
}
fn default_dt() -> f64 {
    0.1
}
fn default_bound() -> f64 {
    2.0
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig::YJunction(YJunctionConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumConfig {
    pub enabled: bool,
    /// `beta` as a fraction of the epoch budget.
    pub beta_fraction: f64,
    pub base: f64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            beta_fraction: 0.15,
            base: DEFAULT_BASE,
        }
    }
}

impl CurriculumConfig {
    pub fn forcing(&self, epochs: usize) -> Result<Forcing> {
        if !self.enabled || self.beta_fraction == 0.0 {
            return Ok(Forcing::Off);
        }
        Ok(Forcing::Schedule(CurriculumSchedule::from_fraction(
            self.beta_fraction,
            self.base,
            epochs,
        )?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub hidden: usize,
    pub depth: usize,
    pub edge_types: usize,
    pub temperature: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            depth: 2,
            edge_types: 2,
            temperature: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscSettings {
    pub hidden: Vec<usize>,
    pub gp_coeff: f64,
    pub learning_rate: f64,
    /// Discriminator steps per SAC update.
    pub steps_per_update: usize,
    /// Rows per loss term.
    pub batch_rows: usize,
}

impl Default for DiscSettings {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            gp_coeff: 10.0,
            learning_rate: 3e-4,
            steps_per_update: 5,
            batch_rows: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub objective: Objective,
    pub alpha_mode: AlphaMode,
    pub curriculum: CurriculumConfig,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    /// Early stop after this many epochs without a better validation error.
    pub patience: usize,
    pub net: NetConfig,
    pub disc: DiscSettings,
    pub sac: SacConfig,
    pub rollout_episodes: usize,
    /// Interpolated trajectories added to the replay buffer each epoch and
    /// drawn per discriminator step.
    pub interp_per_epoch: usize,
    pub expert_episodes: usize,
    pub eval_episodes: usize,
    pub dataset_seed: u64,
    /// Epochs-to-threshold counts epochs until the validation error drops
    /// below this fraction of its initial value.
    pub threshold_ratio: f64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            objective: Objective::SsMse,
            alpha_mode: AlphaMode::Symmetric,
            curriculum: CurriculumConfig::default(),
            seeds: vec![0, 1, 2, 3, 4],
            epochs: 300,
            patience: 20,
            net: NetConfig::default(),
            disc: DiscSettings::default(),
            sac: SacConfig::default(),
            rollout_episodes: 8,
            interp_per_epoch: 4,
            expert_episodes: 64,
            eval_episodes: 16,
            dataset_seed: 0,
            threshold_ratio: 0.1,
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

impl RunConfig {
    /// Small widths and a 60-epoch budget: one seed trains in under a
    /// minute on a single core.
    pub fn desk() -> Self {
        let mut cfg = Self::default();
        cfg.epochs = 60;
        cfg.net.hidden = 16;
        cfg.disc = DiscSettings {
            hidden: vec![32, 32],
            learning_rate: 1e-3,
            batch_rows: 128,
            ..DiscSettings::default()
        };
        cfg.sac.batch_size = 128;
        cfg.sac.updates_per_epoch = 20;
        cfg.sac.actor_lr = 1e-3;
        cfg.sac.critic_lr = 1e-3;
        cfg.eval_episodes = 8;
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.epochs == 0 || self.rollout_episodes == 0 || self.expert_episodes == 0 || self.eval_episodes == 0 {
            return Err(Error::Config("epochs and episode counts must be positive".into()));
        }
        if self.objective == Objective::SsMse && self.interp_per_epoch == 0 {
            return Err(Error::Config("ss_mse needs at least one interpolated trajectory per step".into()));
        }
        if self.disc.batch_rows == 0 || self.disc.hidden.contains(&0) {
            return Err(Error::Config("discriminator sizes must be positive".into()));
        }
        if !(self.threshold_ratio > 0.0) {
            return Err(Error::Config("threshold ratio must be positive".into()));
        }
        if self.curriculum.enabled && self.curriculum.beta_fraction < 0.0 {
            return Err(Error::Config("beta fraction must be >= 0".into()));
        }
        self.sac.validate()?;
        self.curriculum.forcing(self.epochs)?;
        Ok(())
    }

    pub fn disc_config(&self) -> DiscConfig {
        DiscConfig {
            objective: self.objective,
            hidden: self.disc.hidden.clone(),
            gp_coeff: self.disc.gp_coeff,
        }
    }

    pub fn policy_config(&self, spec: &EnvSpec) -> PolicyConfig {
        PolicyConfig {
            agents: spec.agents,
            state_dim: spec.state_dim,
            action_dim: spec.action_dim,
            hidden: self.net.hidden,
            depth: self.net.depth,
            edge_types: self.net.edge_types,
            temperature: self.net.temperature,
            action_bound: spec.action_bound,
        }
    }
}

/// Environment plus expert data split into train / validation / test
/// references, and the normalizer fit on the training experts.
#[derive(Clone)]
pub struct Dataset {
    pub env: Arc<dyn Environment>,
    pub spec: EnvSpec,
    pub train: Vec<Trajectory>,
    pub val: Vec<Trajectory>,
    pub test: Vec<Trajectory>,
    pub normalizer: Normalizer,
    /// Behavior modes for the training error; empty means "compare each
    /// episode with its own reference".
    pub templates: Vec<Trajectory>,
}

const VAL_OFFSET: u64 = 1 << 32;
const TEST_OFFSET: u64 = 2 << 32;

impl Dataset {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let env: Arc<dyn Environment> = match &cfg.env {
            EnvConfig::YJunction(y) => Arc::new(YJunction::new(y.clone())),
            EnvConfig::Letters { horizon, dt, action_bound } => Arc::new(Letters {
                spec: LetterSpec::ml(),
                horizon: *horizon,
                dt: *dt,
                action_bound: *action_bound,
            }),
            EnvConfig::File { path, dt, action_bound } => {
                let trajs = read_trajectories(path)?;
                let env = RecordedEnv::new(trajs, *dt, *action_bound)?;
                return Self::from_recorded(env, cfg.expert_episodes, cfg.eval_episodes, cfg.dataset_seed);
            }
        };
        Self::from_env(env, cfg.expert_episodes, cfg.eval_episodes, cfg.dataset_seed)
    }

    /// Shuffle recorded episodes and split off `n_eval` validation and
    /// `n_eval` test episodes; at most `n_train` of the rest train.
    pub fn from_recorded(env: RecordedEnv, n_train: usize, n_eval: usize, dataset_seed: u64) -> Result<Self> {
        use rand::seq::SliceRandom;
        let mut all = env.episodes().to_vec();
        if all.len() < 2 * n_eval + 1 {
            return Err(Error::Config(format!(
                "{} recorded episodes cannot fill {n_eval} validation + {n_eval} test + training",
                all.len()
            )));
        }
        all.shuffle(&mut ChaCha8Rng::seed_from_u64(dataset_seed));
        let test = all.split_off(all.len() - n_eval);
        let val = all.split_off(all.len() - n_eval);
        all.truncate(n_train);
        let normalizer = Normalizer::fit(&all)?;
        let spec = env.spec();
        Ok(Self {
            env: Arc::new(env),
            spec,
            train: all,
            val,
            test,
            normalizer,
            templates: Vec::new(),
        })
    }

    pub fn from_env(env: Arc<dyn Environment>, n_train: usize, n_eval: usize, dataset_seed: u64) -> Result<Self> {
        let spec = env.spec();
        let base = dataset_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let draw = |offset: u64, n: usize| -> Vec<Trajectory> {
            (0..n as u64).map(|i| env.expert(base.wrapping_add(offset + i))).collect()
        };
        let train = draw(0, n_train);
        let val = draw(VAL_OFFSET, n_eval);
        let test = draw(TEST_OFFSET, n_eval);
        let normalizer = Normalizer::fit(&train)?;
        let templates = env.mode_templates();
        Ok(Self {
            spec,
            train,
            val,
            test,
            normalizer,
            templates,
            env,
        })
    }

    /// Training error of raw generated episodes against the modes (or
    /// their references when the environment has none).
    pub fn error(&self, generated: &[Trajectory], references: &[Trajectory]) -> Result<f64> {
        if self.templates.is_empty() {
            paired_error(generated, references)
        } else {
            training_error(generated, &self.templates)
        }
    }

    pub fn coverage(&self, generated: &[Trajectory]) -> Option<ModeCoverage> {
        if self.templates.len() >= 2 {
            mode_coverage(generated, &self.templates).ok()
        } else {
            None
        }
    }
}

/// `k_steps` discriminator updates on frozen generated/expert sets. Each
/// step draws `batch_rows` rows per loss term; for ss_mse, `n_interp`
/// fresh interpolations of randomly paired `(generated[i], experts[i])`
/// supply the third term. Returns the loss trace.
#[allow(clippy::too_many_arguments)]
pub fn discriminator_epoch(
    disc: &mut Discriminator,
    adam: &mut AdamState,
    generated: &[Trajectory],
    experts: &[Trajectory],
    sampler: &mut AlphaSampler,
    k_steps: usize,
    n_interp: usize,
    batch_rows: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    use rand::Rng;
    if generated.is_empty() || experts.is_empty() {
        return Err(Error::Empty("discriminator trajectories"));
    }
    let gen_rows = SampleBatch::from_trajectories(generated, 0.0);
    let exp_rows = SampleBatch::from_trajectories(experts, 1.0);
    let mut trace = Vec::with_capacity(k_steps);
    for _ in 0..k_steps {
        let interpolated = if disc.objective() == Objective::SsMse {
            let mut inter = Vec::with_capacity(n_interp);
            for _ in 0..n_interp {
                let i = rng.gen_range(0..generated.len());
                inter.push(interpolate(&generated[i], &experts[i % experts.len()], sampler.sample())?);
            }
            SampleBatch::from_interpolated(&inter).sample_rows(batch_rows, rng)?
        } else {
            SampleBatch::default()
        };
        let batches = DiscBatches {
            generated: gen_rows.sample_rows(batch_rows, rng)?,
            expert: exp_rows.sample_rows(batch_rows, rng)?,
            interpolated,
        };
        trace.push(disc.update(adam, &batches, rng)?);
    }
    Ok(trace)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpochStats {
    pub forcing_frequency: f64,
    pub mean_segment_length: Option<f64>,
    pub discriminator_loss: Option<f64>,
    pub policy_objective: Option<f64>,
    pub discriminator_updates: usize,
    pub policy_updates: usize,
}

#[derive(Clone, Debug)]
pub struct EvalStats {
    pub error: f64,
    pub coverage: Option<ModeCoverage>,
    pub trajectories: Vec<Trajectory>,
}

/// State of one seed's training loop.
pub struct SeedRun {
    pub cfg: RunConfig,
    pub seed: u64,
    pub data: Arc<Dataset>,
    pub policy: GraphPolicy,
    pub disc: Discriminator,
    pub disc_adam: AdamState,
    pub optim: SacOptim,
    pub buffer: ReplayBuffer,
    pub sampler: AlphaSampler,
    pub forcing: Forcing,
    pub epoch: usize,
    rng: ChaCha8Rng,
}

const EVAL_SALT: u64 = 0x5EED_0E7A;

impl SeedRun {
    pub fn new(cfg: &RunConfig, data: Arc<Dataset>, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let spec = data.spec;
        let policy = GraphPolicy::new(cfg.policy_config(&spec), cfg.sac.polyak_rho, seed)?;
        let disc = Discriminator::new(
            cfg.disc_config(),
            spec.agents * spec.state_dim,
            spec.agents * spec.action_dim,
            spec.action_bound,
            seed ^ 0xD15C,
        )?;
        let disc_adam = AdamState::new(&disc.params, AdamConfig::with_lr(cfg.disc.learning_rate));
        let optim = SacOptim::new(&policy, &cfg.sac);
        Ok(Self {
            cfg: cfg.clone(),
            seed,
            policy,
            disc,
            disc_adam,
            optim,
            buffer: ReplayBuffer::new(cfg.sac.buffer_capacity)?,
            sampler: AlphaSampler::new(cfg.alpha_mode, seed ^ 0xA1FA),
            forcing: cfg.curriculum.forcing(cfg.epochs)?,
            epoch: 0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x7A11),
            data,
        })
    }

    /// Free-running stochastic rollouts from the given references with a
    /// fixed evaluation seed.
    pub fn evaluate(&self, refs: &[Trajectory]) -> Result<EvalStats> {
        evaluate_policy(&self.policy, &self.data, refs, self.seed)
    }

    pub fn train_epoch(&mut self) -> Result<EpochStats> {
        let data = Arc::clone(&self.data);
        let cfg = &self.cfg;
        let norm = &data.normalizer;
        let frequency = self.forcing.frequency(self.epoch)?;
        let refs = sample_references(&data.train, cfg.rollout_episodes, &mut self.rng);
        let roll = collect_rollouts(&self.policy, data.env.as_ref(), norm, &refs, frequency, false, &mut self.rng)?;
        let refs_norm = refs
            .iter()
            .map(|r| norm.normalize_trajectory(r))
            .collect::<Result<Vec<_>>>()?;

        let updates = cfg.sac.updates_per_epoch;
        let k = cfg.disc.steps_per_update * updates;
        let trace = discriminator_epoch(
            &mut self.disc,
            &mut self.disc_adam,
            &roll.normalized,
            &refs_norm,
            &mut self.sampler,
            k,
            cfg.interp_per_epoch,
            cfg.disc.batch_rows,
            &mut self.rng,
        )?;

        self.buffer.extend(roll.transitions.iter().cloned());
        let mut inter = Vec::with_capacity(cfg.interp_per_epoch);
        for _ in 0..cfg.interp_per_epoch {
            use rand::Rng;
            let i = self.rng.gen_range(0..roll.normalized.len());
            let alpha = self.sampler.sample();
            let ib = interpolate(&roll.normalized[i], &refs_norm[i], alpha)?;
            inter.push((alpha, ib.trajectory));
        }
        self.buffer
            .extend(interpolated_transitions(&self.policy, norm, data.spec.dt, &inter)?);

        let mut objective = Vec::new();
        for _ in 0..updates {
            let stats = sac_update(
                &mut self.policy,
                &mut self.optim,
                &self.buffer,
                &self.disc,
                &cfg.sac,
                &mut self.rng,
            )?;
            if !stats.skipped {
                objective.push(stats.actor_objective);
            }
        }

        let segs: Vec<usize> = roll.plans.iter().flat_map(|p| p.segment_lengths()).collect();
        self.epoch += 1;
        Ok(EpochStats {
            forcing_frequency: frequency,
            mean_segment_length: mean(&segs.iter().map(|&s| s as f64).collect::<Vec<_>>()),
            discriminator_loss: mean(&trace),
            policy_objective: mean(&objective),
            discriminator_updates: trace.len(),
            policy_updates: objective.len(),
        })
    }

    /// Merged policy and discriminator parameters.
    pub fn export_params(&self) -> ParameterSet {
        let mut out = self.policy.export_params();
        for (name, t) in self.disc.params.iter() {
            let mut t = t.clone();
            t.zero_grad();
            out.insert(format!("disc/{name}"), t).expect("disc prefix is unique");
        }
        out
    }

    pub fn checkpoint_meta(&self, epoch: usize) -> serde_json::Value {
        serde_json::json!({
            "config": self.cfg,
            "seed": self.seed,
            "epoch": epoch,
            "normalizer": self.data.normalizer,
        })
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

pub fn evaluate_policy(policy: &GraphPolicy, data: &Dataset, refs: &[Trajectory], seed: u64) -> Result<EvalStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ EVAL_SALT);
    let trajectories = evaluate_controller(policy, data.env.as_ref(), &data.normalizer, refs, false, 0.0, &mut rng)?;
    Ok(EvalStats {
        error: data.error(&trajectories, refs)?,
        coverage: data.coverage(&trajectories),
        trajectories,
    })
}

/// Outcome of one seed of [`train`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub initial_error: f64,
    pub best_val_error: f64,
    /// Test error of the best-validation checkpoint.
    pub final_error: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// First epoch whose validation error fell below `threshold_ratio`
    /// times the initial error; `epochs + 1` if never.
    pub epochs_to_threshold: usize,
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

impl SeedSummary {
    pub fn converged(&self, ratio: f64) -> bool {
        self.final_error < ratio * self.initial_error
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub seeds: Vec<(u64, std::result::Result<SeedSummary, String>)>,
}

impl TrainReport {
    pub fn summaries(&self) -> Vec<&SeedSummary> {
        self.seeds.iter().filter_map(|(_, r)| r.as_ref().ok()).collect()
    }

    pub fn all_ok(&self) -> bool {
        self.seeds.iter().all(|(_, r)| r.is_ok())
    }
}

pub fn metrics_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("metrics_seed{seed}.csv"))
}

pub fn checkpoint_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("checkpoint_seed{seed}.ckpt"))
}

/// Run one seed to completion, writing its metrics CSV and best checkpoint.
pub fn train_seed(cfg: &RunConfig, data: Arc<Dataset>, seed: u64) -> Result<SeedSummary> {
    let dir = cfg.output_dir.clone();
    let mut run = SeedRun::new(cfg, data, seed)?;
    let val = run.data.val.clone();
    let test = run.data.test.clone();

    let initial = run.evaluate(&val)?;
    let mut rows = vec![MetricsRow {
        epoch: 0,
        seed,
        training_error: initial.error,
        mode_coverage: initial.coverage.as_ref().map(|c| c.frequencies.clone()).unwrap_or_default(),
        mode_distance: initial.coverage.as_ref().map(|c| c.mean_distance),
        forcing_frequency: run.forcing.frequency(0)?,
        ..MetricsRow::default()
    }];
    let mut best = (initial.error, 0usize, run.evaluate(&test)?.error, run.export_params());
    let mut to_threshold = None;

    for epoch in 1..=cfg.epochs {
        let stats = run.train_epoch()?;
        let ev = run.evaluate(&val)?;
        if !ev.error.is_finite() {
            return Err(Error::NonFinite("validation error"));
        }
        rows.push(MetricsRow {
            epoch,
            seed,
            training_error: ev.error,
            discriminator_loss: stats.discriminator_loss,
            policy_objective: stats.policy_objective,
            mode_coverage: ev.coverage.as_ref().map(|c| c.frequencies.clone()).unwrap_or_default(),
            mode_distance: ev.coverage.as_ref().map(|c| c.mean_distance),
            forcing_frequency: stats.forcing_frequency,
            mean_segment_length: stats.mean_segment_length,
            compounding_error: Vec::new(),
        });
        if to_threshold.is_none() && ev.error < cfg.threshold_ratio * initial.error {
            to_threshold = Some(epoch);
        }
        if ev.error < best.0 {
            best = (ev.error, epoch, run.evaluate(&test)?.error, run.export_params());
        }
        log::debug!("seed {seed} epoch {epoch}: val error {:.4}", ev.error);
        if epoch - best.1 >= cfg.patience {
            break;
        }
    }

    let metrics = metrics_path(&dir, seed);
    write_metrics(&metrics, &rows)?;
    let ckpt = checkpoint_path(&dir, seed);
    checkpoint::save(&ckpt, &best.3, &run.checkpoint_meta(best.1))?;
    Ok(SeedSummary {
        seed,
        initial_error: initial.error,
        best_val_error: best.0,
        final_error: best.2,
        best_epoch: best.1,
        epochs_run: rows.len() - 1,
        epochs_to_threshold: to_threshold.unwrap_or(cfg.epochs + 1),
        metrics_path: metrics,
        checkpoint_path: ckpt,
    })
}

/// Train every configured seed (in parallel), writing per-seed metrics and
/// checkpoints plus `config.json` and `summary.csv` under `output_dir`.
/// A failing seed does not stop the others.
pub fn train(cfg: &RunConfig) -> Result<TrainReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    let data = Arc::new(Dataset::build(cfg)?);
    let seeds: Vec<(u64, std::result::Result<SeedSummary, String>)> = cfg
        .seeds
        .par_iter()
        .map(|&s| {
            let r = train_seed(cfg, Arc::clone(&data), s).map_err(|e| e.to_string());
            if let Err(e) = &r {
                log::error!("seed {s} aborted: {e}");
            }
            (s, r)
        })
        .collect();
    let report = TrainReport { seeds };
    write_summary(&cfg.output_dir.join("summary.csv"), &report)?;
    Ok(report)
}

fn write_summary(path: &Path, report: &TrainReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "seed",
        "status",
        "initial_error",
        "best_val_error",
        "final_error",
        "best_epoch",
        "epochs_run",
        "epochs_to_threshold",
    ])?;
    for (seed, r) in &report.seeds {
        match r {
            Ok(s) => w.write_record([
                seed.to_string(),
                "ok".into(),
                format!("{:.10e}", s.initial_error),
                format!("{:.10e}", s.best_val_error),
                format!("{:.10e}", s.final_error),
                s.best_epoch.to_string(),
                s.epochs_run.to_string(),
                s.epochs_to_threshold.to_string(),
            ])?,
            Err(e) => w.write_record([
                seed.to_string(),
                format!("error: {e}"),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Policy, discriminator and data restored from a training checkpoint.
pub struct LoadedCheckpoint {
    pub config: RunConfig,
    pub seed: u64,
    pub epoch: usize,
    pub policy: GraphPolicy,
    pub disc: Discriminator,
    pub normalizer: Normalizer,
}

fn subset(merged: &ParameterSet, prefix: &str) -> Result<ParameterSet> {
    let mut out = ParameterSet::new();
    let p = format!("{prefix}/");
    for (name, t) in merged.iter() {
        if let Some(rest) = name.strip_prefix(&p) {
            out.insert(rest, t.clone())?;
        }
    }
    Ok(out)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<LoadedCheckpoint> {
    let (params, meta) = checkpoint::load(path)?;
    let config: RunConfig = serde_json::from_value(meta["config"].clone())?;
    let seed = meta["seed"].as_u64().ok_or_else(|| Error::Config("checkpoint lacks seed".into()))?;
    let epoch = meta["epoch"].as_u64().unwrap_or(0) as usize;
    let normalizer: Normalizer = serde_json::from_value(meta["normalizer"].clone())?;
    let spec = Dataset::build(&config)?.spec;
    let mut policy = GraphPolicy::new(config.policy_config(&spec), config.sac.polyak_rho, seed)?;
    policy.import_params(&params)?;
    let mut disc = Discriminator::new(
        config.disc_config(),
        spec.agents * spec.state_dim,
        spec.agents * spec.action_dim,
        spec.action_bound,
        0,
    )?;
    checkpoint::restore_into(&mut disc.params, &subset(&params, "disc")?)?;
    Ok(LoadedCheckpoint {
        config,
        seed,
        epoch,
        policy,
        disc,
        normalizer,
    })
}

/// Evaluation of a checkpoint on the held-out test references.
#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub seed: u64,
    pub epoch: usize,
    pub training_error: f64,
    pub mode_coverage: Option<ModeCoverage>,
    pub noise_sigma: f64,
    pub horizons: Vec<usize>,
    pub compounding_error: Vec<f64>,
    pub compounding_slope: Option<f64>,
}

pub fn evaluate_checkpoint(
    path: impl AsRef<Path>,
    noise_sigma: f64,
    horizons: &[usize],
    prefix: usize,
) -> Result<EvalReport> {
    let ck = load_checkpoint(path)?;
    let mut data = Dataset::build(&ck.config)?;
    data.normalizer = ck.normalizer.clone();
    let ev = evaluate_policy(&ck.policy, &data, &data.test, ck.seed)?;
    let compounding = if horizons.is_empty() {
        Vec::new()
    } else {
        compounding_error(
            &ck.policy,
            data.env.as_ref(),
            &data.normalizer,
            &data.test,
            noise_sigma,
            horizons,
            prefix,
            ck.seed ^ EVAL_SALT,
        )?
    };
    let compounding_slope = (horizons.len() >= 2).then(|| {
        let xs: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();
        slope(&xs, &compounding)
    });
    Ok(EvalReport {
        seed: ck.seed,
        epoch: ck.epoch,
        training_error: ev.error,
        mode_coverage: ev.coverage,
        noise_sigma,
        horizons: horizons.to_vec(),
        compounding_error: compounding,
        compounding_slope,
    })
}

/// Discriminator landscape of a checkpoint around the test expert's state
/// at step `t`, sweeping agent `agent`.
pub fn checkpoint_landscape(
    path: impl AsRef<Path>,
    region: Region,
    resolution: usize,
    agent: usize,
    t: usize,
) -> Result<Vec<GridPoint>> {
    let ck = load_checkpoint(path)?;
    let data = Dataset::build(&ck.config)?;
    let reference = data.test.first().ok_or(Error::Empty("test references"))?;
    if t >= reference.horizon() {
        return Err(Error::InvalidArgument(format!("step {t} beyond horizon {}", reference.horizon())));
    }
    let slice = LandscapeSlice {
        base_state: reference.state(t).to_vec(),
        base_action: reference.action(t).to_vec(),
        agent,
        state_dim: data.spec.state_dim,
    };
    landscape_grid(&ck.disc, &ck.normalizer, &slice, region, resolution)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationParam {
    AlphaRange,
    Beta,
}

impl std::str::FromStr for AblationParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha_range" => Ok(Self::AlphaRange),
            "beta" => Ok(Self::Beta),
            other => Err(Error::Config(format!("unknown ablation parameter `{other}`"))),
        }
    }
}

/// Apply one ablation value to a config. `alpha_range` takes
/// `positive_unit`, `symmetric`, `extended` (or `0:1`, `-1:1`, `-1:1.5`);
/// `beta` takes a fraction of the epoch budget, `0` disabling forcing.
pub fn apply_ablation(base: &RunConfig, param: AblationParam, value: &str) -> Result<RunConfig> {
    let mut cfg = base.clone();
    match param {
        AblationParam::AlphaRange => {
            cfg.alpha_mode = match value {
                "positive_unit" | "0:1" => AlphaMode::PositiveUnit,
                "symmetric" | "-1:1" => AlphaMode::Symmetric,
                "extended" | "-1:1.5" => AlphaMode::Extended,
                other => return Err(Error::Config(format!("unknown alpha range `{other}`"))),
            }
        }
        AblationParam::Beta => {
            let f: f64 = value
                .parse()
                .map_err(|e| Error::Config(format!("beta value `{value}`: {e}")))?;
            if f < 0.0 {
                return Err(Error::Config("beta fraction must be >= 0".into()));
            }
            cfg.curriculum.enabled = f > 0.0;
            if f > 0.0 {
                cfg.curriculum.beta_fraction = f;
            }
        }
    }
    let tag: String = value.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect();
    let name = match param {
        AblationParam::AlphaRange => format!("alpha_range_{tag}"),
        AblationParam::Beta => format!("beta_{tag}"),
    };
    cfg.output_dir = base.output_dir.join(name);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRow {
    pub value: String,
    pub seed: u64,
    pub final_error: Option<f64>,
    pub epochs_to_threshold: Option<usize>,
}

/// Train one arm per value and write `ablation_<param>.csv` under the base
/// output directory.
pub fn ablate(base: &RunConfig, param: AblationParam, values: &[String]) -> Result<Vec<AblationRow>> {
    let configs = values
        .iter()
        .map(|v| apply_ablation(base, param, v))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&base.output_dir)?;
    let mut rows = Vec::new();
    for (v, cfg) in values.iter().zip(&configs) {
        let report = train(cfg)?;
        for (seed, r) in &report.seeds {
            rows.push(AblationRow {
                value: v.clone(),
                seed: *seed,
                final_error: r.as_ref().ok().map(|s| s.final_error),
                epochs_to_threshold: r.as_ref().ok().map(|s| s.epochs_to_threshold),
            });
        }
    }
    let name = match param {
        AblationParam::AlphaRange => "alpha_range",
        AblationParam::Beta => "beta",
    };
    let mut w = csv::Writer::from_path(base.output_dir.join(format!("ablation_{name}.csv")))?;
    w.write_record(["param", "value", "seed", "final_error", "epochs_to_threshold"])?;
    for r in &rows {
        w.write_record([
            name.to_string(),
            r.value.clone(),
            r.seed.to_string(),
            r.final_error.map(|e| format!("{e:.10e}")).unwrap_or_default(),
            r.epochs_to_threshold.map(|e| e.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}
