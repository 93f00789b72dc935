//! Compounding error under observation noise for a behavioral-cloning
//! policy, or for a trained checkpoint when one is given.
//!
//! cargo run --release --example noise_robustness [checkpoint]

use std::sync::Arc;

use ssmail::envs::{YJunction, YJunctionConfig};
use ssmail::graph_policy::GraphPolicy;
use ssmail::trainer::{bc_baseline_train, compounding_error, load_checkpoint, slope, BcConfig, Dataset, RunConfig};

fn main() -> ssmail::Result<()> {
    let env = Arc::new(YJunction::new(YJunctionConfig::default()));
    let data = Dataset::from_env(env.clone(), 64, 32, 0)?;
    let (policy, norm) = match std::env::args().nth(1) {
        Some(path) => {
            let ck = load_checkpoint(path)?;
            (ck.policy, ck.normalizer)
        }
        None => {
            let cfg = RunConfig::desk();
            let mut p = GraphPolicy::new(cfg.policy_config(&data.spec), 0.995, 0)?;
            let bc = BcConfig {
                epochs: 80,
                ..BcConfig::default()
            };
            bc_baseline_train(&mut p, &data.spec, &data.normalizer, &data.train, &bc, 0)?;
            (p, data.normalizer.clone())
        }
    };
    let horizons: Vec<usize> = (1..=9).map(|k| 5 * k).collect();
    let hx: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();
    for sigma in [0.0, 0.05, 0.1] {
        let e = compounding_error(&policy, env.as_ref(), &norm, &data.test, sigma, &horizons, 5, 0)?;
        let shown: Vec<String> = e.iter().map(|v| format!("{v:.3}")).collect();
        println!("sigma {sigma:.2}: slope {:.5}  errors [{}]", slope(&hx, &e), shown.join(", "));
    }
    Ok(())
}
