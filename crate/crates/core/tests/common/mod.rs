#![allow(dead_code)]

pub mod gradcases;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use ssmail::autodiff::{Tape, Tensor, Var};
use ssmail::nn::{Bound, ParameterSet};
use ssmail::Result;

pub const FD_STEP: f64 = 1e-6;
/// Gradients below this magnitude are compared absolutely.
pub const REL_FLOOR: f64 = 1e-3;
/// At most this many coordinates are probed per parameter tensor.
pub const MAX_PROBES: usize = 24;

#[derive(Clone, Debug)]
pub struct GradReport {
    pub max_rel_err: f64,
    pub worst: String,
    pub probes: usize,
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR)
}

pub fn random_tensor(shape: &[usize], lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Reduce any value to a scalar with fixed random weights, so every output
/// coordinate contributes to the checked gradient.
pub fn weighted_sum(tape: &mut Tape, v: Var, seed: u64) -> Result<Var> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = tape.shape(v).to_vec();
    let n: usize = shape.iter().product();
    let w = tape.constant(&shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let p = tape.mul(v, w)?;
    tape.sum(p, None)
}

/// Central finite differences against reverse mode over every parameter of
/// every set. `f` must be a deterministic function of the bound values.
pub fn check_sets<F>(sets: &mut [&mut ParameterSet], f: F) -> GradReport
where
    F: Fn(&mut Tape, &[Bound]) -> Result<Var>,
{
    let eval = |sets: &[&mut ParameterSet]| -> f64 {
        let mut tape = Tape::new();
        let bounds: Vec<Bound> = sets.iter().map(|s| s.bind_frozen(&mut tape)).collect();
        let loss = f(&mut tape, &bounds).expect("forward");
        tape.item(loss)
    };

    let mut tape = Tape::new();
    let bounds: Vec<Bound> = sets.iter().map(|s| s.bind(&mut tape)).collect();
    let loss = f(&mut tape, &bounds).expect("forward");
    assert_eq!(tape.shape(loss).iter().product::<usize>(), 1, "loss must be scalar");
    tape.backward(loss).expect("backward");
    for (s, b) in sets.iter_mut().zip(&bounds) {
        s.zero_grad();
        s.accumulate_grads(&tape, b);
    }
    let analytic: Vec<Vec<(String, Vec<f64>)>> = sets
        .iter()
        .map(|s| {
            s.iter()
                .map(|(n, t)| (n.to_string(), t.grad().map(<[f64]>::to_vec).unwrap_or_default()))
                .collect()
        })
        .collect();

    let mut report = GradReport {
        max_rel_err: 0.0,
        worst: String::new(),
        probes: 0,
    };
    for (si, grads) in analytic.iter().enumerate() {
        for (name, g) in grads {
            let n = g.len();
            let stride = (n / MAX_PROBES).max(1);
            for i in (0..n).step_by(stride) {
                let orig = sets[si].get(name).unwrap().data()[i];
                sets[si].get_mut(name).unwrap().data_mut()[i] = orig + FD_STEP;
                let up = eval(sets);
                sets[si].get_mut(name).unwrap().data_mut()[i] = orig - FD_STEP;
                let down = eval(sets);
                sets[si].get_mut(name).unwrap().data_mut()[i] = orig;
                let num = (up - down) / (2.0 * FD_STEP);
                let e = rel_err(g[i], num);
                report.probes += 1;
                if e > report.max_rel_err {
                    report.max_rel_err = e;
                    report.worst = format!("{name}[{i}]: analytic {} numeric {num}", g[i]);
                }
            }
        }
    }
    report
}

/// [`check_sets`] over plain input tensors `x0, x1, ...`.
pub fn check_inputs<F>(inputs: Vec<Tensor>, f: F) -> GradReport
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut set = ParameterSet::new();
    for (i, t) in inputs.into_iter().enumerate() {
        set.insert(format!("x{i}"), t).unwrap();
    }
    check_sets(&mut [&mut set], |tape, b| f(tape, b[0].vars()))
}

/// A run small enough for a debug-speed test: two epochs, tiny widths.
pub fn tiny_config(dir: &std::path::Path) -> ssmail::trainer::RunConfig {
    let mut cfg = ssmail::trainer::RunConfig::default();
    cfg.seeds = vec![0];
    cfg.epochs = 2;
    cfg.net.hidden = 8;
    cfg.net.depth = 1;
    cfg.disc.hidden = vec![8];
    cfg.disc.batch_rows = 32;
    cfg.disc.steps_per_update = 2;
    cfg.sac.batch_size = 32;
    cfg.sac.updates_per_epoch = 2;
    cfg.rollout_episodes = 4;
    cfg.interp_per_epoch = 2;
    cfg.expert_episodes = 8;
    cfg.eval_episodes = 4;
    cfg.output_dir = dir.to_path_buf();
    cfg
}
