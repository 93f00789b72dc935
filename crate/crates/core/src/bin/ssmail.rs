use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ssmail::trainer::{self, AblationParam, Region};
use ssmail::{Error, Result};

#[derive(Parser)]
#[command(name = "ssmail", about = "Self-supervised adversarial imitation for multi-agent trajectories")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train every seed in a run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Use seeds `0..n` instead of the config's list.
        #[arg(long)]
        seeds: Option<u64>,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on held-out references.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        /// Comma-separated compounding-error horizons.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        prefix: usize,
    },
    /// Write a discriminator score grid as CSV.
    Landscape {
        #[arg(long)]
        checkpoint: PathBuf,
        /// `x0,y0,x1,y1`
        #[arg(long, allow_hyphen_values = true)]
        region: Region,
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        #[arg(long, default_value_t = 0)]
        agent: usize,
        #[arg(long, default_value_t = 10)]
        step: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one arm per value of an ablation parameter.
    Ablate {
        /// Base run config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// `alpha_range` or `beta`
        #[arg(long)]
        param: AblationParam,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<String>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Train { config, seeds, out } => {
            let mut cfg = trainer::RunConfig::load(config)?;
            if let Some(n) = seeds {
                cfg.seeds = (0..n).collect();
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let report = trainer::train(&cfg)?;
            for s in report.summaries() {
                println!(
                    "seed {}: initial {:.4} -> test {:.4} (best epoch {}, {} epochs)",
                    s.seed, s.initial_error, s.final_error, s.best_epoch, s.epochs_run
                );
            }
            Ok(report.all_ok())
        }
        Cmd::Eval {
            checkpoint,
            noise_sigma,
            horizons,
            prefix,
        } => {
            let report = trainer::evaluate_checkpoint(checkpoint, noise_sigma, &horizons, prefix)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
        Cmd::Landscape {
            checkpoint,
            region,
            resolution,
            agent,
            step,
            out,
        } => {
            let grid = trainer::checkpoint_landscape(checkpoint, region, resolution, agent, step)?;
            trainer::write_landscape(&out, &grid)?;
            Ok(true)
        }
        Cmd::Ablate { config, param, values } => {
            if values.is_empty() {
                return Err(Error::Config("no ablation values given".into()));
            }
            let cfg = match config {
                Some(path) => trainer::RunConfig::load(path)?,
                None => trainer::RunConfig::default(),
            };
            let rows = trainer::ablate(&cfg, param, &values)?;
            Ok(rows.iter().all(|r| r.final_error.is_some()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
