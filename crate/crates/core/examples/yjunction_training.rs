//! Train SS-MAIL on the Y-Junction with the desk preset for one seed and
//! report convergence, branch coverage and the metrics CSV location.
//!
//! cargo run --release --example yjunction_training [epochs]

use ssmail::trainer::{train, RunConfig};

fn main() -> ssmail::Result<()> {
    env_logger::init();
    let mut cfg = RunConfig::desk();
    cfg.seeds = vec![0];
    if let Some(e) = std::env::args().nth(1) {
        cfg.epochs = e.parse().expect("epochs must be an integer");
    }
    cfg.output_dir = std::env::temp_dir().join("ssmail_yjunction");
    let report = train(&cfg)?;
    for s in report.summaries() {
        println!(
            "seed {}: error {:.4} -> {:.4} (best epoch {}, threshold at epoch {}), converged: {}",
            s.seed,
            s.initial_error,
            s.final_error,
            s.best_epoch,
            s.epochs_to_threshold,
            s.converged(cfg.threshold_ratio)
        );
        println!("metrics: {}", s.metrics_path.display());
        println!("checkpoint: {}", s.checkpoint_path.display());
    }
    Ok(())
}
