//! Acceptance harness: one PASS/FAIL line per headline criterion.
//!
//! Deterministic criteria (gradients, loss arithmetic, curriculum,
//! discriminator regression, determinism) fail the process. The training
//! comparisons are directional claims about stochastic optimization; they
//! are reported but do not fail the build.
//!
//! Runs the full desk-scale training budget (~15-20 min on one core).

mod common;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssmail::autodiff::Tape;
use ssmail::curriculum::{apply_forcing, CurriculumSchedule, DEFAULT_BASE};
use ssmail::discriminator::{
    interpolate, ss_label, ss_loss, AlphaMode, AlphaSampler, DiscConfig, Discriminator, Objective, SampleBatch,
};
use ssmail::envs::{Environment, Normalizer, Trajectory, YJunction, YJunctionConfig};
use ssmail::graph_policy::GraphPolicy;
use ssmail::nn::{checkpoint, AdamConfig, AdamState};
use ssmail::trainer::{
    self, bc_baseline_train, collect_rollouts, compounding_error, discriminator_epoch, evaluate_controller,
    load_checkpoint, mode_coverage, observe, slope, BcConfig, Controller, Dataset, RunConfig, SeedRun, TrainReport,
};

struct Outcome {
    name: &'static str,
    pass: bool,
    hard: bool,
    detail: String,
}

fn report(out: &mut Vec<Outcome>, name: &'static str, hard: bool, pass: bool, detail: String) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    out.push(Outcome {
        name,
        pass,
        hard,
        detail,
    });
}

fn root() -> PathBuf {
    let p = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = std::fs::remove_dir_all(&p);
    std::fs::create_dir_all(&p).unwrap();
    p
}

fn autodiff(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let cases = common::gradcases::all_cases();
    let secs = start.elapsed().as_secs_f64();
    let worst = cases
        .iter()
        .max_by(|a, b| a.1.max_rel_err.total_cmp(&b.1.max_rel_err))
        .unwrap();
    let failed = cases.iter().filter(|c| !(c.1.max_rel_err < 1e-3)).count();
    let pass = cases.len() >= 100 && failed == 0 && secs < 120.0;
    report(
        out,
        "autodiff soundness",
        true,
        pass,
        format!(
            "{} checks, {failed} failed, worst rel err {:.2e} ({}), {secs:.1}s",
            cases.len(),
            worst.1.max_rel_err,
            worst.0
        ),
    );
}

/// A discriminator whose output is the constant `c` everywhere.
fn constant_disc(c: f64) -> Discriminator {
    let cfg = DiscConfig {
        objective: Objective::SsMse,
        hidden: vec![4],
        gp_coeff: 10.0,
    };
    let mut d = Discriminator::new(cfg, 2, 2, 2.0, 0).unwrap();
    let names: Vec<String> = d.params.iter().map(|(n, _)| n.to_string()).collect();
    for n in &names {
        let t = d.params.get_mut(n).unwrap();
        let last = n.ends_with("l1.b");
        t.data_mut().iter_mut().for_each(|v| *v = if last { c } else { 0.0 });
    }
    d
}

fn rows(labels: &[f64]) -> SampleBatch {
    let mut b = SampleBatch::new(2, 2);
    for (i, &l) in labels.iter().enumerate() {
        b.push(&[i as f64 * 0.1, -0.2], &[0.5, -1.0], l);
    }
    b
}

fn ss_value(c: f64, gen: &[f64], exp: &[f64], int: &[f64]) -> f64 {
    let d = constant_disc(c);
    let mut t = Tape::new();
    let b = d.params.bind_frozen(&mut t);
    let l = ss_loss(&mut t, &d, &b, &rows(gen), &rows(exp), &rows(int)).unwrap();
    t.item(l)
}

fn loss_arithmetic(out: &mut Vec<Outcome>) {
    // (D - 0)^2 + (D - 1)^2 + (D - 0.5)^2 at D = 0.5
    let a = ss_value(0.5, &[0.0, 0.0], &[1.0], &[0.5, 0.5, 0.5]);
    // D = 0: 0 + 1 + mean(0.25, 0.04)
    let b = ss_value(0.0, &[0.0], &[1.0, 1.0], &[0.5, 0.2]);
    // D = 1: 1 + 0 + mean(1, 0.25)
    let c = ss_value(1.0, &[0.0], &[1.0], &[0.0, 0.5]);
    let pass = a == 0.5 && b == 1.0 + (0.25 + 0.04) / 2.0 && c == 1.0 + 1.25 / 2.0;
    report(
        out,
        "ss loss arithmetic",
        true,
        pass,
        format!("D=0.5 -> {a}, D=0 -> {b}, D=1 -> {c} (expected 0.5, 1.145, 1.625)"),
    );
}

fn curriculum(out: &mut Vec<Outcome>) {
    let s = CurriculumSchedule::new(45.0, DEFAULT_BASE, 300).unwrap();
    let f = s.intervention_frequency(45.0).unwrap();
    let ratio = s.expected_segment_length(135.0).unwrap() / s.expected_segment_length(90.0).unwrap();
    let freq_err = (f - 1.0 / 1.5).abs();
    let ratio_err = (ratio - 1.5).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let q = s.intervention_frequency(120.0).unwrap();
    let plan = apply_forcing(q, 100_000, 100_000, &mut rng).unwrap();
    let segs = plan.segment_lengths();
    let mean = segs.iter().sum::<usize>() as f64 / segs.len() as f64;
    let sim_err = (mean * q - 1.0).abs();
    let pass = freq_err <= 1e-12 && ratio_err <= 1e-12 && sim_err < 0.05;
    report(
        out,
        "curriculum arithmetic",
        true,
        pass,
        format!(
            "|f(beta) - 1/1.5| = {freq_err:.1e}, |ratio - 1.5| = {ratio_err:.1e}, \
             simulated segment {mean:.3} vs 1/f {:.3} ({:.2}%)",
            1.0 / q,
            100.0 * sim_err
        ),
    );
}

/// Generated episodes from an untrained policy and normalized experts,
/// split into training and held-out pairs.
struct FrozenData {
    train_gen: Vec<Trajectory>,
    train_exp: Vec<Trajectory>,
    held_gen: Vec<Trajectory>,
    held_exp: Vec<Trajectory>,
    spec: ssmail::envs::EnvSpec,
}

fn frozen_data() -> FrozenData {
    let env = YJunction::new(YJunctionConfig::default());
    let experts: Vec<Trajectory> = (0..48).map(|s| env.expert(s)).collect();
    let norm = Normalizer::fit(&experts).unwrap();
    let cfg = RunConfig::desk();
    let policy = GraphPolicy::new(cfg.policy_config(&env.spec()), 0.995, 77).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let roll = collect_rollouts(&policy, &env, &norm, &experts, 0.0, false, &mut rng).unwrap();
    let exp: Vec<Trajectory> = experts.iter().map(|t| norm.normalize_trajectory(t).unwrap()).collect();
    FrozenData {
        train_gen: roll.normalized[..32].to_vec(),
        train_exp: exp[..32].to_vec(),
        held_gen: roll.normalized[32..].to_vec(),
        held_exp: exp[32..].to_vec(),
        spec: env.spec(),
    }
}

/// Mean score over all rows of the held-out interpolations at `alpha`.
fn mean_score(d: &Discriminator, data: &FrozenData, alpha: f64) -> f64 {
    let inter: Vec<_> = data
        .held_gen
        .iter()
        .zip(&data.held_exp)
        .map(|(g, e)| interpolate(g, e, alpha).unwrap())
        .collect();
    let s = d.score(&SampleBatch::from_interpolated(&inter)).unwrap();
    s.iter().sum::<f64>() / s.len() as f64
}

fn train_frozen(data: &FrozenData, mode: AlphaMode) -> Discriminator {
    let cfg = DiscConfig {
        objective: Objective::SsMse,
        hidden: vec![64, 64],
        gp_coeff: 10.0,
    };
    let w_s = data.spec.agents * data.spec.state_dim;
    let w_a = data.spec.agents * data.spec.action_dim;
    let mut d = Discriminator::new(cfg, w_s, w_a, data.spec.action_bound, 5).unwrap();
    let mut adam = AdamState::new(&d.params, AdamConfig::with_lr(1e-3));
    let mut sampler = AlphaSampler::new(mode, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    discriminator_epoch(&mut d, &mut adam, &data.train_gen, &data.train_exp, &mut sampler, 2000, 4, 128, &mut rng)
        .unwrap();
    d
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

fn discriminator_regression(out: &mut Vec<Outcome>, data: &FrozenData) {
    let start = Instant::now();
    let d = train_frozen(data, AlphaMode::Symmetric);
    let grid: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
    let scores: Vec<f64> = grid.iter().map(|&a| mean_score(&d, data, a)).collect();
    let err = grid
        .iter()
        .zip(&scores)
        .map(|(&a, &s)| (s - ss_label(a)).abs())
        .sum::<f64>()
        / grid.len() as f64;
    let unit: Vec<usize> = (10..21).collect();
    let rho = spearman(
        &unit.iter().map(|&i| grid[i]).collect::<Vec<_>>(),
        &unit.iter().map(|&i| scores[i]).collect::<Vec<_>>(),
    );
    let secs = start.elapsed().as_secs_f64();
    report(
        out,
        "discriminator regression",
        true,
        err < 0.1 && rho >= 0.9 && secs < 300.0,
        format!("mean |D - label| over 21 held-out alphas {err:.4} (< 0.1), spearman on [0,1] {rho:.3} (>= 0.9), {secs:.1}s"),
    );
}

fn beyond_expert(out: &mut Vec<Outcome>, data: &FrozenData) {
    let d = train_frozen(data, AlphaMode::Extended);
    let at1 = mean_score(&d, data, 1.0);
    let at12 = mean_score(&d, data, 1.2);
    let at14 = mean_score(&d, data, 1.4);
    report(
        out,
        "beyond-expert drop",
        true,
        at12 < at1 && at14 < at1,
        format!("D(1.0) {at1:.4}, D(1.2) {at12:.4}, D(1.4) {at14:.4}"),
    );
}

fn run(cfg: &RunConfig, dir: &Path, name: &str) -> TrainReport {
    let mut cfg = cfg.clone();
    cfg.output_dir = dir.join(name);
    let start = Instant::now();
    let r = trainer::train(&cfg).unwrap();
    println!("  [{name}: {} seeds in {:.0}s]", cfg.seeds.len(), start.elapsed().as_secs_f64());
    r
}

fn mean<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let v: Vec<f64> = it.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn convergence(out: &mut Vec<Outcome>, ss: &TrainReport, gail: &TrainReport, ratio: f64) {
    let count = |r: &TrainReport| r.summaries().iter().filter(|s| s.converged(ratio)).count();
    let line = |r: &TrainReport| {
        r.summaries()
            .iter()
            .map(|s| format!("{:.3}/{:.3}", s.final_error, s.initial_error))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let (a, b) = (count(ss), count(gail));
    report(
        out,
        "y-junction convergence",
        false,
        a >= 4 && b < a,
        format!("ss_mse {a}/5 below 0.1x initial [{}]; gail_bce {b}/5 [{}]", line(ss), line(gail)),
    );
}

fn held_out_refs(env: &dyn Environment, n: usize) -> Vec<Trajectory> {
    (0..n as u64).map(|i| env.expert((3 << 32) + i)).collect()
}

fn train_bc(data: &Dataset, cfg: &RunConfig, seed: u64) -> GraphPolicy {
    let mut policy = GraphPolicy::new(cfg.policy_config(&data.spec), cfg.sac.polyak_rho, seed).unwrap();
    let bc = BcConfig {
        epochs: 150,
        ..BcConfig::default()
    };
    bc_baseline_train(&mut policy, &data.spec, &data.normalizer, &data.train, &bc, seed).unwrap();
    policy
}

fn multimodality_and_noise(out: &mut Vec<Outcome>, ss: &TrainReport, cfg: &RunConfig) {
    let data = Dataset::build(cfg).unwrap();
    let env = data.env.as_ref();
    let modes = env.mode_templates();
    let refs = held_out_refs(env, 100);
    let noisy_refs = held_out_refs(env, 32);
    let horizons: Vec<usize> = (1..=9).map(|k| 5 * k).collect();
    let hx: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();

    let mut ss_lines = Vec::new();
    let mut ss_ok = 0;
    let mut bc_dist = Vec::new();
    let mut slopes = (Vec::new(), Vec::new());
    for s in ss.summaries() {
        let ck = load_checkpoint(&s.checkpoint_path).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let gen = evaluate_controller(&ck.policy, env, &ck.normalizer, &refs, false, 0.0, &mut rng).unwrap();
        let cov = mode_coverage(&gen, &modes).unwrap();
        let ok = cov.frequencies.iter().all(|&f| f >= 0.2) && cov.mean_distance < 0.5;
        ss_ok += ok as usize;
        ss_lines.push(format!("[{:.2} {:.2}] d={:.2}", cov.frequencies[0], cov.frequencies[1], cov.mean_distance));

        let bc = train_bc(&data, cfg, s.seed);
        let gen = evaluate_controller(&bc, env, &data.normalizer, &refs, true, 0.0, &mut rng).unwrap();
        bc_dist.push(mode_coverage(&gen, &modes).unwrap().mean_distance);

        let e_ss = compounding_error(&ck.policy, env, &ck.normalizer, &noisy_refs, 0.05, &horizons, 5, s.seed).unwrap();
        let e_bc = compounding_error(&bc, env, &data.normalizer, &noisy_refs, 0.05, &horizons, 5, s.seed).unwrap();
        slopes.0.push(slope(&hx, &e_ss));
        slopes.1.push(slope(&hx, &e_bc));
    }
    let n = ss.summaries().len();
    let bc_avg = bc_dist.iter().all(|&d| d > 1.0);
    report(
        out,
        "multi-modality",
        false,
        ss_ok * 2 > n && bc_avg,
        format!(
            "ss_mse seeds covering both branches (>=20% each, dist < 0.5): {ss_ok}/{n} {}; \
             bc distance-to-nearest-branch {} (> 1 = averaging)",
            ss_lines.join(" "),
            bc_dist.iter().map(|d| format!("{d:.2}")).collect::<Vec<_>>().join(" ")
        ),
    );
    let (a, b) = (mean(slopes.0.iter().copied()), mean(slopes.1.iter().copied()));
    report(
        out,
        "noise robustness",
        false,
        a < b,
        format!("mean compounding-error slope at sigma 0.05: ss_mse {a:.5}, bc {b:.5}"),
    );
}

fn beta_ablation(out: &mut Vec<Outcome>, arms: &[(&str, &TrainReport)]) {
    let means: Vec<(&str, f64)> = arms
        .iter()
        .map(|(n, r)| (*n, mean(r.summaries().iter().map(|s| s.final_error))))
        .collect();
    let best = means.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    report(
        out,
        "beta ablation direction",
        false,
        best == "15%",
        format!(
            "mean test error {}",
            means.iter().map(|(n, m)| format!("{n}: {m:.4}")).collect::<Vec<_>>().join(", ")
        ),
    );
}

fn alpha_ablation(out: &mut Vec<Outcome>, sym: &TrainReport, pos: &TrainReport) {
    let ett = |r: &TrainReport| mean(r.summaries().iter().map(|s| s.epochs_to_threshold as f64));
    let (a, b) = (ett(sym), ett(pos));
    report(
        out,
        "negative-alpha ablation direction",
        false,
        a <= b,
        format!("mean epochs-to-threshold [-1,1]: {a:.1}, [0,1]: {b:.1}"),
    );
}

fn determinism(out: &mut Vec<Outcome>, dir: &Path) {
    let mut cfg = common::tiny_config(&dir.join("det_a"));
    cfg.seeds = vec![0, 1];
    cfg.epochs = 3;
    trainer::train(&cfg).unwrap();
    cfg.output_dir = dir.join("det_b");
    trainer::train(&cfg).unwrap();
    let same_csv = (0..2).all(|s| {
        std::fs::read(trainer::metrics_path(&dir.join("det_a"), s)).unwrap()
            == std::fs::read(trainer::metrics_path(&dir.join("det_b"), s)).unwrap()
    });

    let data = Arc::new(Dataset::build(&cfg).unwrap());
    let mut run = SeedRun::new(&cfg, data.clone(), 3).unwrap();
    run.train_epoch().unwrap();
    let path = dir.join("rt.ckpt");
    checkpoint::save(&path, &run.export_params(), &run.checkpoint_meta(1)).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    let obs: Vec<f64> = data.train[..4].iter().flat_map(|t| observe(&data.normalizer, t.state(5))).collect();
    let mut bit_exact = true;
    for det in [true, false] {
        let (mut m1, mut m2) = (run.policy.begin(4).unwrap(), loaded.policy.begin(4).unwrap());
        let (mut r1, mut r2) = (ChaCha8Rng::seed_from_u64(1), ChaCha8Rng::seed_from_u64(1));
        for _ in 0..5 {
            let a = Controller::act(&run.policy, &mut m1, &obs, det, &mut r1).unwrap();
            let b = Controller::act(&loaded.policy, &mut m2, &obs, det, &mut r2).unwrap();
            bit_exact &= a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
        }
    }
    report(
        out,
        "determinism and round-trip",
        true,
        same_csv && bit_exact,
        format!("metrics CSVs byte-identical: {same_csv}; checkpoint actions bit-exact: {bit_exact}"),
    );
}

fn main() {
    let start = Instant::now();
    let dir = root();
    let mut out = Vec::new();

    autodiff(&mut out);
    loss_arithmetic(&mut out);
    let frozen = frozen_data();
    discriminator_regression(&mut out, &frozen);
    beyond_expert(&mut out, &frozen);
    curriculum(&mut out);
    determinism(&mut out, &dir);

    let base = RunConfig::desk();
    let ss = run(&base, &dir, "ss_mse");
    let mut gail_cfg = base.clone();
    gail_cfg.objective = Objective::GailBce;
    let gail = run(&gail_cfg, &dir, "gail_bce");
    convergence(&mut out, &ss, &gail, base.threshold_ratio);
    multimodality_and_noise(&mut out, &ss, &base);

    let b0 = run(&trainer::apply_ablation(&base, trainer::AblationParam::Beta, "0").unwrap(), &dir, "beta_0");
    let b100 = run(&trainer::apply_ablation(&base, trainer::AblationParam::Beta, "1.0").unwrap(), &dir, "beta_100");
    beta_ablation(&mut out, &[("0", &b0), ("15%", &ss), ("100%", &b100)]);
    let pos = run(
        &trainer::apply_ablation(&base, trainer::AblationParam::AlphaRange, "positive_unit").unwrap(),
        &dir,
        "alpha_0_1",
    );
    alpha_ablation(&mut out, &ss, &pos);

    let passed = out.iter().filter(|o| o.pass).count();
    println!("\n{passed}/{} criteria passed in {:.0}s", out.len(), start.elapsed().as_secs_f64());
    let hard: Vec<&Outcome> = out.iter().filter(|o| o.hard && !o.pass).collect();
    for o in &hard {
        eprintln!("hard failure: {} ({})", o.name, o.detail);
    }
    if !hard.is_empty() {
        std::process::exit(1);
    }
}
