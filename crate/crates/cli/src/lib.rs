//! Library side of the `narrens` binary: configuration, artifact layout and
//! one function per subcommand.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use narrens_core::vote::ModelKind;

use commands::{Ctx, Partition};
use config::ExperimentConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "narrens", version, about = "Transcript classification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Replace one config value, e.g. `svm.seed=3`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stratified train/dev/test split.
    Split(ConfigArgs),
    /// Fit TF-IDF and engineered features on the training split.
    Featurize(ConfigArgs),
    /// Select C and kernel for the SVM.
    GridSearch(ConfigArgs),
    /// Train the SVM on the training split.
    TrainSvm(ConfigArgs),
    /// Run one model and write its votes.
    Predict {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long)]
        model: ModelKind,
        #[arg(long, value_enum, default_value = "test")]
        partition: Partition,
    },
    /// Majority vote over the enabled models.
    Ensemble(ConfigArgs),
    /// Score every enabled model and the ensemble.
    Evaluate {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long, value_enum, default_value = "test")]
        partition: Partition,
    },
    /// All stages end to end.
    Experiment(ConfigArgs),
    /// Write a synthetic labeled corpus.
    Synth {
        #[arg(long, default_value_t = 441)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        pos_ratio: f64,
        #[arg(long)]
        seed: u64,
        /// Class signal strength in [0, 1].
        #[arg(long, default_value_t = 1.0)]
        signal: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn ctx(args: &ConfigArgs) -> Result<Ctx, CliError> {
    Ctx::new(ExperimentConfig::load(&args.config, &args.overrides)?)
}

/// Runs one subcommand and returns a short summary for stdout.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Split(a) => {
            let m = commands::cmd_split(&ctx(&a)?)?;
            Ok(format!("train {} dev {} test {}", m.train.len(), m.dev.len(), m.test.len()))
        }
        Command::Featurize(a) => Ok(format!("dim {}", commands::cmd_featurize(&ctx(&a)?)?)),
        Command::GridSearch(a) => {
            let r = commands::cmd_grid_search(&ctx(&a)?)?;
            let b = r.best();
            Ok(format!("best C {} kernel {:?} mean F1 {:.4}", b.c, b.kernel, b.mean_f1))
        }
        Command::TrainSvm(a) => {
            let m = commands::cmd_train_svm(&ctx(&a)?)?;
            Ok(format!("support vectors {}", m.support_vectors.len()))
        }
        Command::Predict { args, model, partition } => {
            let votes = commands::cmd_predict(&ctx(&args)?, model, partition)?;
            Ok(format!("{model}: {} votes", votes.len()))
        }
        Command::Ensemble(a) => Ok(format!("{} decisions", commands::cmd_ensemble(&ctx(&a)?)?.len())),
        Command::Evaluate { args, partition } => {
            let r = commands::cmd_evaluate(&ctx(&args)?, partition)?;
            Ok(narrens_core::eval::render_report(&r, narrens_core::eval::ReportFormat::Text))
        }
        Command::Experiment(a) => {
            let r = commands::cmd_experiment(&ctx(&a)?)?;
            Ok(narrens_core::eval::render_report(&r, narrens_core::eval::ReportFormat::Text))
        }
        Command::Synth { n, pos_ratio, seed, signal, out } => {
            let n = commands::cmd_synth(n, pos_ratio, seed, signal, &out)?;
            Ok(format!("wrote {n} transcripts to {}", out.display()))
        }
    }
}
