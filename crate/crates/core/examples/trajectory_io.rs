//! Write expert trajectories to CSV, read them back, and perturb them with
//! observation noise.
//!
//! cargo run --release --example trajectory_io

use ssmail::envs::{inject_noise, read_trajectories, write_trajectories, Environment, YJunction, YJunctionConfig};

fn main() -> ssmail::Result<()> {
    let env = YJunction::new(YJunctionConfig::default());
    let experts: Vec<_> = (0..4).map(|s| env.expert(s)).collect();
    let dir = std::env::temp_dir().join("ssmail_trajectory_io");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("experts.csv");
    write_trajectories(&path, &experts)?;
    let back = read_trajectories(&path)?;
    println!("wrote and read {} episodes to {}", back.len(), path.display());
    println!("round trip exact: {}", back == experts);

    let noisy = inject_noise(&experts[0], 0.05, 1)?;
    let rms = (noisy
        .states()
        .iter()
        .zip(experts[0].states())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / noisy.states().len() as f64)
        .sqrt();
    println!("noise sigma 0.05 -> state rms deviation {rms:.4}");
    Ok(())
}
