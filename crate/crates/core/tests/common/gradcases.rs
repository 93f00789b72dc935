//! Randomized gradient-check cases: every tape op on random shapes, then
//! whole networks and losses.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssmail::autodiff::{ReduceOp, Tape, Var};
use ssmail::discriminator::{
    gail_bce_loss, ss_loss, wasserstein_loss, DiscConfig, Discriminator, Objective, SampleBatch,
};
use ssmail::graph_policy::{sample_edges, GraphPolicy, PolicyConfig};
use ssmail::nn::{edge_to_node, node_to_edge, Activation, FullGraph, LstmCell, Mlp, ParameterSet};
use ssmail::Result;

use super::{check_inputs, check_sets, random_tensor, weighted_sum, GradReport};

pub const TOL: f64 = 1e-3;

pub type Case = (String, GradReport);

pub fn op_cases(rng: &mut ChaCha8Rng) -> Vec<Case> {
    let mut out: Vec<Case> = Vec::new();
    let mut push = |name: String, r: GradReport| out.push((name, r));
    for trial in 0..3u64 {
        let (m, n, k) = (rng.gen_range(1..5), rng.gen_range(1..5), rng.gen_range(1..5));
        let seed = 100 + trial;

        for (label, op) in [
            ("add", Tape::add as fn(&mut Tape, Var, Var) -> Result<Var>),
            ("sub", Tape::sub),
            ("mul", Tape::mul),
        ] {
            let a = random_tensor(&[m, n], -2.0, 2.0, rng);
            let b = random_tensor(&[m, n], -2.0, 2.0, rng);
            push(
                format!("{label} {m}x{n}"),
                check_inputs(vec![a, b], |t, x| {
                    let y = op(t, x[0], x[1])?;
                    weighted_sum(t, y, seed)
                }),
            );
            let a = random_tensor(&[m, n], -2.0, 2.0, rng);
            let b = random_tensor(&[n], -2.0, 2.0, rng);
            push(
                format!("{label} broadcast {m}x{n} . {n}"),
                check_inputs(vec![a, b], |t, x| {
                    let y = op(t, x[0], x[1])?;
                    weighted_sum(t, y, seed)
                }),
            );
        }

        type Unary = fn(&mut Tape, Var) -> Var;
        for (label, op, lo) in [
            ("neg", Tape::neg as Unary, -2.0),
            ("exp", Tape::exp, -2.0),
            ("tanh", Tape::tanh, -2.0),
            ("sigmoid", Tape::sigmoid, -3.0),
            ("relu", Tape::relu, -2.0),
            ("square", Tape::square, -2.0),
            ("softplus", Tape::softplus, -3.0),
        ] {
            let a = random_tensor(&[m, n], lo, -lo, rng);
            push(
                format!("{label} {m}x{n}"),
                check_inputs(vec![a], |t, x| {
                    let y = op(t, x[0]);
                    weighted_sum(t, y, seed)
                }),
            );
        }
        let a = random_tensor(&[m, n], 0.2, 3.0, rng);
        push(
            format!("log {m}x{n}"),
            check_inputs(vec![a], |t, x| {
                let y = t.log(x[0])?;
                weighted_sum(t, y, seed)
            }),
        );
        let a = random_tensor(&[m, n], -2.0, 2.0, rng);
        push(
            "affine".into(),
            check_inputs(vec![a], |t, x| {
                let y = t.affine(x[0], -1.7, 0.3);
                weighted_sum(t, y, seed)
            }),
        );

        let a = random_tensor(&[m, k], -1.0, 1.0, rng);
        let b = random_tensor(&[k, n], -1.0, 1.0, rng);
        push(
            format!("matmul {m}x{k} {k}x{n}"),
            check_inputs(vec![a, b], |t, x| {
                let y = t.matmul(x[0], x[1])?;
                weighted_sum(t, y, seed)
            }),
        );

        for kind in [ReduceOp::Sum, ReduceOp::Mean, ReduceOp::Max] {
            for axis in [None, Some(0), Some(1)] {
                let a = random_tensor(&[m, n], -2.0, 2.0, rng);
                push(
                    format!("{kind:?} axis {axis:?}"),
                    check_inputs(vec![a], |t, x| {
                        let y = t.reduce(kind, x[0], axis)?;
                        weighted_sum(t, y, seed)
                    }),
                );
            }
        }

        let (a, b) = (random_tensor(&[m, n], -1.0, 1.0, rng), random_tensor(&[m, k], -1.0, 1.0, rng));
        push(
            "concat axis 1".into(),
            check_inputs(vec![a, b], |t, x| {
                let y = t.concat(&[x[0], x[1]], 1)?;
                weighted_sum(t, y, seed)
            }),
        );
        let (a, b) = (random_tensor(&[m, n], -1.0, 1.0, rng), random_tensor(&[k, n], -1.0, 1.0, rng));
        push(
            "concat axis 0".into(),
            check_inputs(vec![a, b], |t, x| {
                let y = t.concat(&[x[0], x[1]], 0)?;
                weighted_sum(t, y, seed)
            }),
        );
        let a = random_tensor(&[m, n + 2], -1.0, 1.0, rng);
        push(
            "narrow".into(),
            check_inputs(vec![a], |t, x| {
                let y = t.narrow(x[0], 1, 1, n)?;
                weighted_sum(t, y, seed)
            }),
        );
        let a = random_tensor(&[m, n + 1], -2.0, 2.0, rng);
        push(
            "softmax".into(),
            check_inputs(vec![a], |t, x| {
                let y = t.softmax(x[0], 1)?;
                weighted_sum(t, y, seed)
            }),
        );
        let a = random_tensor(&[m, n], -2.0, 2.0, rng);
        push(
            "reshape".into(),
            check_inputs(vec![a], |t, x| {
                let y = t.reshape(x[0], &[n * m])?;
                let y = t.square(y);
                weighted_sum(t, y, seed)
            }),
        );
        let idx: Rc<[usize]> = (0..m + 2).map(|_| rng.gen_range(0..m)).collect();
        let a = random_tensor(&[m, n], -2.0, 2.0, rng);
        let gi = Rc::clone(&idx);
        push(
            "gather_rows".into(),
            check_inputs(vec![a], move |t, x| {
                let y = t.gather_rows(x[0], Rc::clone(&gi))?;
                weighted_sum(t, y, seed)
            }),
        );
        let a = random_tensor(&[m + 2, n], -2.0, 2.0, rng);
        push(
            "scatter_add_rows".into(),
            check_inputs(vec![a], move |t, x| {
                let y = t.scatter_add_rows(x[0], Rc::clone(&idx), m)?;
                weighted_sum(t, y, seed)
            }),
        );
    }
    out
}

pub fn mlp_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParameterSet::new();
    let mlp = Mlp::new(&mut params, "m", &[3, 6, 5, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
    let x = random_tensor(&[4, 3], -1.0, 1.0, &mut rng);
    let r = check_sets(&mut [&mut params], |t, b| {
        let xv = t.constant(x.shape(), x.data().to_vec())?;
        let y = mlp.forward(t, &b[0], xv)?;
        weighted_sum(t, y, seed)
    });
    (format!("mlp seed {seed}"), r)
}

pub fn lstm_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParameterSet::new();
    let cell = LstmCell::new(&mut params, "l", 3, 4, &mut rng).unwrap();
    let xs: Vec<_> = (0..5).map(|_| random_tensor(&[2, 3], -1.0, 1.0, &mut rng)).collect();
    let r = check_sets(&mut [&mut params], |t, b| {
        let mut h = t.constant(&[2, 4], vec![0.0; 8])?;
        let mut c = h;
        for x in &xs {
            let xv = t.constant(x.shape(), x.data().to_vec())?;
            (h, c) = cell.step(t, &b[0], xv, h, c)?;
        }
        let hc = t.add(h, c)?;
        weighted_sum(t, hc, seed)
    });
    (format!("lstm chain seed {seed}"), r)
}

pub fn message_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParameterSet::new();
    let fe = Mlp::new(&mut params, "fe", &[4, 5], Activation::Tanh, Activation::Tanh, &mut rng).unwrap();
    let fv = Mlp::new(&mut params, "fv", &[7, 3], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
    let graph = FullGraph::new(2, 3).unwrap();
    let x = random_tensor(&[6, 2], -1.0, 1.0, &mut rng);
    let r = check_sets(&mut [&mut params], |t, b| {
        let xv = t.constant(x.shape(), x.data().to_vec())?;
        let e = node_to_edge(t, &graph, xv, None, |t, v| fe.forward(t, &b[0], v))?;
        let v = edge_to_node(t, &graph, e, Some(xv), |t, v| fv.forward(t, &b[0], v))?;
        weighted_sum(t, v, seed)
    });
    (format!("message passing seed {seed}"), r)
}

fn batch(rng: &mut ChaCha8Rng, rows: usize, label: f64) -> SampleBatch {
    let mut b = SampleBatch::new(4, 2);
    for _ in 0..rows {
        let s: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        b.push(&s, &a, label);
    }
    b
}

pub fn disc_case(objective: Objective, seed: u64) -> Case {
    let cfg = DiscConfig {
        objective,
        hidden: vec![8, 8],
        gp_coeff: 10.0,
    };
    let disc = Discriminator::new(cfg, 4, 2, 2.0, seed).unwrap();
    let mut params = disc.params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = batch(&mut rng, 5, 0.0);
    let exp = batch(&mut rng, 5, 1.0);
    let mut inter = SampleBatch::new(4, 2);
    for _ in 0..5 {
        let alpha = rng.gen_range(-1.0..1.0f64);
        let s: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        inter.push(&s, &[0.3, -0.2], alpha.max(0.0));
    }
    let r = check_sets(&mut [&mut params], |t, b| match objective {
        Objective::SsMse => ss_loss(t, &disc, &b[0], &gen, &exp, &inter),
        Objective::GailBce => gail_bce_loss(t, &disc, &b[0], &gen, &exp),
        Objective::Wasserstein => {
            let mut r = ChaCha8Rng::seed_from_u64(seed ^ 7);
            wasserstein_loss(t, &disc, &b[0], &gen, &exp, 10.0, &mut r)
        }
    });
    (format!("{objective:?} loss seed {seed}"), r)
}

/// Encoder step, relaxed edge sample, squashed-Gaussian actor and critic in
/// one graph; `loss = mean Q(s, a~pi) - 0.1 mean log pi`.
pub fn gsac_case(seed: u64) -> Case {
    let cfg = PolicyConfig {
        agents: 3,
        state_dim: 2,
        action_dim: 2,
        hidden: 5,
        depth: 1,
        edge_types: 2,
        temperature: 0.5,
        action_bound: 2.0,
    };
    let policy = GraphPolicy::new(cfg, 0.995, seed).unwrap();
    let mut enc = policy.encoder_params.clone();
    let mut act = policy.actor_params.clone();
    let mut cri = policy.critics.online.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = policy.graph(2).unwrap();
    let x = random_tensor(&[6, 2], -1.0, 1.0, &mut rng);
    let eps: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let r = check_sets(&mut [&mut enc, &mut act, &mut cri], |t, b| {
        let xv = t.constant(x.shape(), x.data().to_vec())?;
        let state = policy.encoder.initial_state(&graph);
        let step = policy.encoder.step_from(t, &b[0], &graph, &state, xv)?;
        let mut g = ChaCha8Rng::seed_from_u64(seed ^ 11);
        let z = sample_edges(t, &step.graph, false, &mut g)?;
        let out = policy.actor.forward_with_noise(t, &b[1], &graph, xv, z, &eps)?;
        let q = policy.critic.forward(t, &b[2], &graph, xv, z, out.action)?;
        let q = t.mean(q, None)?;
        let lp = t.mean(out.log_prob, None)?;
        let lp = t.scale(lp, 0.1);
        t.sub(q, lp)
    });
    (format!("g-sac pass seed {seed}"), r)
}

/// The full randomized suite: op cases plus composed networks and losses.
pub fn all_cases() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = op_cases(&mut rng);
    for s in 0..4 {
        cases.push(mlp_case(s));
        cases.push(lstm_case(s));
        cases.push(message_case(s));
        cases.push(gsac_case(s));
    }
    for s in 0..3 {
        for obj in [Objective::SsMse, Objective::GailBce, Objective::Wasserstein] {
            cases.push(disc_case(obj, s));
        }
    }
    cases
}
