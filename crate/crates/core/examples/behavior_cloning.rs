//! Multi-step behavioral cloning on the bimodal Y-Junction, the baseline
//! that averages the two branches.
//!
//! cargo run --release --example behavior_cloning

use ssmail::envs::{YJunction, YJunctionConfig};
use ssmail::graph_policy::GraphPolicy;
use ssmail::trainer::{bc_baseline_train, evaluate_controller, mode_coverage, BcConfig, Dataset, RunConfig};
use std::sync::Arc;
use std::time::Instant;

fn main() -> ssmail::Result<()> {
    let env = Arc::new(YJunction::new(YJunctionConfig::default()));
    let data = Dataset::from_env(env.clone(), 64, 16, 0)?;
    let mut cfg = RunConfig::default();
    cfg.net.hidden = 16;
    let mut policy = GraphPolicy::new(cfg.policy_config(&data.spec), 0.995, 0)?;

    let bc = BcConfig {
        epochs: 150,
        ..BcConfig::default()
    };
    let start = Instant::now();
    let report = bc_baseline_train(&mut policy, &data.spec, &data.normalizer, &data.train, &bc, 0)?;
    println!(
        "bc loss {:.4} -> {:.4} in {:.1}s",
        report.losses[0],
        report.losses.last().unwrap(),
        start.elapsed().as_secs_f64()
    );

    let mut rng = rand::SeedableRng::seed_from_u64(1);
    let rollouts = evaluate_controller(&policy, env.as_ref(), &data.normalizer, &data.test, true, 0.0, &mut rng)?;
    let cov = mode_coverage(&rollouts, &env.mode_templates())?;
    println!(
        "branch frequencies {:?}, distance to nearest branch {:.3}",
        cov.frequencies, cov.mean_distance
    );
    let fork = rollouts[0].state(30);
    println!("agent 0 at t=30: ({:.3}, {:.3})", fork[0], fork[1]);
    Ok(())
}
