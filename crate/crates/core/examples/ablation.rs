//! Ablation over the forcing decay constant with a reduced budget; writes
//! `ablation_beta.csv` next to the per-value run directories.
//!
//! cargo run --release --example ablation [epochs]

use ssmail::trainer::{ablate, AblationParam, RunConfig};

fn main() -> ssmail::Result<()> {
    let mut cfg = RunConfig::desk();
    cfg.seeds = vec![0, 1];
    cfg.epochs = std::env::args().nth(1).map_or(20, |e| e.parse().expect("epochs must be an integer"));
    cfg.output_dir = std::env::temp_dir().join("ssmail_ablation");
    let values: Vec<String> = ["0", "0.15", "1.0"].map(String::from).to_vec();
    let rows = ablate(&cfg, AblationParam::Beta, &values)?;
    for r in &rows {
        println!("{r:?}");
    }
    println!("results in {}", cfg.output_dir.display());
    Ok(())
}
