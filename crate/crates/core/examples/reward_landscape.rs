//! Self-supervised discriminator on the "ML" letters task: score profile
//! along the generated-to-expert line (including beyond the expert) and a
//! 2D landscape CSV for the first stroke's position.
//!
//! cargo run --release --example reward_landscape

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssmail::discriminator::{interpolate, AlphaMode, AlphaSampler, DiscConfig, Discriminator, Objective, SampleBatch};
use ssmail::envs::{Environment, Letters, Normalizer};
use ssmail::graph_policy::GraphPolicy;
use ssmail::nn::{AdamConfig, AdamState};
use ssmail::trainer::{collect_rollouts, discriminator_epoch, landscape_grid, write_landscape, LandscapeSlice, Region, RunConfig};

fn main() -> ssmail::Result<()> {
    let env = Letters::default();
    let spec = env.spec();
    let experts: Vec<_> = (0..8).map(|s| env.expert(s)).collect();
    let norm = Normalizer::fit(&experts)?;
    let policy = GraphPolicy::new(RunConfig::desk().policy_config(&spec), 0.995, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gen = collect_rollouts(&policy, &env, &norm, &experts, 0.0, false, &mut rng)?.normalized;
    let exp: Vec<_> = experts.iter().map(|t| norm.normalize_trajectory(t)).collect::<ssmail::Result<_>>()?;

    let cfg = DiscConfig {
        objective: Objective::SsMse,
        hidden: vec![64, 64],
        gp_coeff: 10.0,
    };
    let mut disc = Discriminator::new(cfg, spec.agents * spec.state_dim, spec.agents * spec.action_dim, spec.action_bound, 2)?;
    let mut adam = AdamState::new(&disc.params, AdamConfig::with_lr(1e-3));
    let mut sampler = AlphaSampler::new(AlphaMode::Extended, 3);
    let losses = discriminator_epoch(&mut disc, &mut adam, &gen, &exp, &mut sampler, 1500, 4, 128, &mut rng)?;
    println!("discriminator loss {:.4} -> {:.4}", losses[0], losses.last().unwrap());

    println!("alpha   mean score");
    for k in 0..=10 {
        let alpha = -1.0 + 0.25 * k as f64;
        let inter = interpolate(&gen[0], &exp[0], alpha)?;
        let s = disc.score(&SampleBatch::from_interpolated(&[inter]))?;
        println!("{alpha:5.2}   {:.4}", s.iter().sum::<f64>() / s.len() as f64);
    }

    let t = 25;
    let slice = LandscapeSlice {
        base_state: experts[0].state(t).to_vec(),
        base_action: experts[0].action(t).to_vec(),
        agent: 0,
        state_dim: spec.state_dim,
    };
    let grid = landscape_grid(&disc, &norm, &slice, Region::new(-1.0, -1.0, 4.0, 3.0)?, 50)?;
    let path = std::env::temp_dir().join("ssmail_landscape.csv");
    write_landscape(&path, &grid)?;
    let best = grid.iter().max_by(|a, b| a.score.total_cmp(&b.score)).unwrap();
    let e = experts[0].state(t);
    println!(
        "landscape written to {}; peak at ({:.2}, {:.2}), expert at ({:.2}, {:.2})",
        path.display(),
        best.x,
        best.y,
        e[0],
        e[1]
    );
    Ok(())
}
