//! Batch command-line surface: synth, train, predict, evaluate, consolidate,
//! textlabel, compare. Every command is deterministic given its flags and
//! `--seed`, and writes a run manifest next to its outputs.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 internal invariant
//! violation.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "ecgdnn", version, about = "12-lead ECG classification toolkit")]
struct Cli {
    /// Master seed; all randomness derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset.
    Synth {
        /// Number of records.
        #[arg(long)]
        n: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Per-class prevalence, e.g. "SB=0.2,AF=0.1"; remaining records are
        /// normal sinus. Default: 0.12 for each of the six classes.
        #[arg(long)]
        prevalence: Option<String>,
    },
    /// Train the network on a dataset directory.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Labels CSV; default <dataset>/labels.csv.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// random | by_patient | chronological.
        #[arg(long, default_value = "random")]
        split: String,
        /// Split fractions (train,val,...); splits beyond the second are
        /// held out and recorded in split_assignments.csv.
        #[arg(long, default_value = "0.9,0.1")]
        fractions: String,
        /// Use the whole dataset as both train and validation.
        #[arg(long, default_value_t = false)]
        train_equals_val: bool,
    },
    /// Run a checkpoint over a dataset, emitting per-class probabilities.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against truth labels.
    Evaluate {
        /// Scores CSV from `predict`.
        #[arg(long)]
        scores: PathBuf,
        /// Truth labels CSV.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Bootstrap resample count (0 disables).
        #[arg(long, default_value_t = 0)]
        bootstrap: usize,
        /// Fixed per-class thresholds "t1,..,t6"; default selects max-F1
        /// thresholds from the evaluated set.
        #[arg(long)]
        thresholds: Option<String>,
        /// Measurements CSV enabling the heart-rate-vs-prediction report.
        #[arg(long)]
        measurements: Option<PathBuf>,
    },
    /// Combine label sources and measurements into accept/reject decisions.
    Consolidate {
        #[arg(long)]
        medical: Option<PathBuf>,
        #[arg(long)]
        unig: Option<PathBuf>,
        #[arg(long)]
        minnesota: Option<PathBuf>,
        #[arg(long)]
        measurements: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract candidate labels from free-text reports.
    Textlabel {
        /// Reports file: one `exam_id<TAB>text` per line.
        #[arg(long)]
        reports: PathBuf,
        /// Rule dictionary (JSON array of antecedent/class/confidence).
        #[arg(long)]
        rulebase: PathBuf,
        /// Stop-word list, one per line.
        #[arg(long)]
        stopwords: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise rater agreement (kappa) and misclassification tests (McNemar).
    Compare {
        #[arg(long)]
        truth: PathBuf,
        /// Rater label CSVs.
        #[arg(long, required = true, num_args = 1..)]
        raters: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn classify_error(e: &ecgdnn::Error) -> u8 {
    use ecgdnn::Error::*;
    match e {
        Shape(_) => 3,
        InvalidRecord(_)
        | CorruptCheckpoint(_)
        | UnsupportedVersion(_)
        | InvalidSplit(_)
        | Parse { .. }
        | Config(_)
        | Io(_)
        | Json(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(config::ConfigError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };

    let result = std::panic::catch_unwind(move || run(cli, config));
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(classify_error(&e))
        }
        Err(_) => {
            eprintln!("error: internal invariant violation");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli, config: RunConfig) -> ecgdnn::error::Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Synth { n, out, prevalence } => {
            commands::cmd_synth(n, prevalence.as_deref(), seed, &out, &config)
        }
        Command::Train {
            dataset,
            labels,
            out,
            split,
            fractions,
            train_equals_val,
        } => commands::cmd_train(
            &dataset,
            labels.as_deref(),
            &out,
            &split,
            &fractions,
            train_equals_val,
            seed,
            &config,
        ),
        Command::Predict {
            checkpoint,
            dataset,
            out,
        } => commands::cmd_predict(&checkpoint, &dataset, &out, seed, &config),
        Command::Evaluate {
            scores,
            truth,
            out,
            bootstrap,
            thresholds,
            measurements,
        } => commands::cmd_evaluate(
            &scores,
            &truth,
            &out,
            bootstrap,
            thresholds.as_deref(),
            measurements.as_deref(),
            seed,
            &config,
        ),
        Command::Consolidate {
            medical,
            unig,
            minnesota,
            measurements,
            out,
        } => commands::cmd_consolidate(
            medical.as_deref(),
            unig.as_deref(),
            minnesota.as_deref(),
            measurements.as_deref(),
            &out,
            seed,
            &config,
        ),
        Command::Textlabel {
            reports,
            rulebase,
            stopwords,
            out,
        } => commands::cmd_textlabel(&reports, &rulebase, &stopwords, &out, seed, &config),
        Command::Compare { truth, raters, out } => {
            commands::cmd_compare(&truth, &raters, &out, seed, &config)
        }
    }
}
