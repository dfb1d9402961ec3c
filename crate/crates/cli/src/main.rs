//! `hoe`: data generation, training, evaluation and simulation.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hoe::sim::{EstimatorKind, Task};

use config::EvalEstimator;

/// A failed run: usage and validation problems exit with 2, everything else
/// with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<hoe::Error> for Failure {
    fn from(e: hoe::Error) -> Self {
        use hoe::Error::*;
        match e {
            InvalidAngle(_) | InvalidInput(_) | ModelConfig(_) | Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hoe", version, about = "Confidence-aware body orientation estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Flags override the config file.
#[derive(Debug, Args)]
pub struct Common {
    /// TOML config file, or a resolved config.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (gen-data) or directory (other commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic skeleton dataset (JSON lines).
    GenData {
        #[arg(long)]
        n: Option<usize>,
        /// Weighted occlusion modes, e.g. full:0.5,lower:0.5.
        #[arg(long)]
        mix: Option<String>,
        /// Keypoint noise in body heights.
        #[arg(long)]
        noise: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a model; writes checkpoint.json and metrics.csv.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        /// 23 joints, or 17 to drop the foot joints.
        #[arg(long)]
        joints: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Accuracy and MAE per occlusion mode.
    Eval {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum)]
        estimator: Option<EvalEstimator>,
        #[command(flatten)]
        common: Common,
    },
    /// Precision-recall of confidence and peak probability as reliability scores.
    EvalConfidence {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-loop person following; writes trajectories and an ATE summary.
    Simulate {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Comma-separated: cv_baseline, model, ground_truth.
        #[arg(long, value_delimiter = ',')]
        estimator: Vec<EstimatorKind>,
        /// Comma-separated: backward, forward.
        #[arg(long, value_delimiter = ',')]
        task: Vec<Task>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenData { n, mix, noise, common } => {
            let mut cfg = commands::base(&common)?;
            if let Some(n) = n {
                cfg.data.n = n;
            }
            if let Some(mix) = mix {
                cfg.data.mix = mix;
            }
            if let Some(noise) = noise {
                cfg.data.noise = noise;
            }
            commands::gen_data(cfg)
        }
        Command::Train {
            data,
            epochs,
            joints,
            common,
        } => {
            let mut cfg = commands::base(&common)?;
            cfg.paths.data = data.or(cfg.paths.data);
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(j) = joints {
                cfg.train.num_joints = j;
            }
            commands::train(cfg)
        }
        Command::Eval {
            data,
            checkpoint,
            estimator,
            common,
        } => {
            let mut cfg = commands::base(&common)?;
            cfg.paths.data = data.or(cfg.paths.data);
            cfg.paths.checkpoint = checkpoint.or(cfg.paths.checkpoint);
            if let Some(e) = estimator {
                cfg.eval.estimator = e;
            }
            commands::eval(cfg)
        }
        Command::EvalConfidence {
            data,
            checkpoint,
            common,
        } => {
            let mut cfg = commands::base(&common)?;
            cfg.paths.data = data.or(cfg.paths.data);
            cfg.paths.checkpoint = checkpoint.or(cfg.paths.checkpoint);
            commands::eval_confidence(cfg)
        }
        Command::Simulate {
            scenario,
            estimator,
            task,
            checkpoint,
            common,
        } => {
            let mut cfg = commands::base(&common)?;
            cfg.paths.scenario = scenario.or(cfg.paths.scenario);
            cfg.paths.checkpoint = checkpoint.or(cfg.paths.checkpoint);
            if !estimator.is_empty() {
                cfg.simulate.estimators = estimator;
            }
            if !task.is_empty() {
                cfg.simulate.tasks = task;
            }
            commands::simulate(cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
