use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drag_cli::output::Outcome;
use drag_cli::{compare, config, run_to_dir};
use drag_core::simulator::ExecOptions;

/// Federated-learning experiment runner: local SGD with FedAvg,
/// divergence-based adaptive aggregation, and its Byzantine-robust variant.
#[derive(Parser)]
#[command(name = "drag", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write metrics.csv + manifest.json.
    Run {
        /// JSON config file; keys match the experiment config schema.
        #[arg(long)]
        config: PathBuf,
        /// Override config values, e.g. --set c=0.25 --set drag.alpha=1.0.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory for metrics.csv and manifest.json.
        #[arg(long)]
        out: PathBuf,
        /// Run clients sequentially instead of on the rayon pool.
        /// Results are byte-identical either way.
        #[arg(long)]
        serial: bool,
    },
    /// Compare finished runs: rounds used per aggregator vs the fedavg baseline.
    Compare {
        /// Two or more manifest.json files from matching runs.
        manifests: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            set,
            out,
            serial,
        } => {
            let experiment_config = config::parse_config(&config, &set)?;
            let options = ExecOptions {
                parallel: !serial,
                verify_reference: false,
            };
            let summary = run_to_dir(experiment_config, &out, options)?;
            let outcome = match summary.manifest.outcome {
                Outcome::ReachedTarget => "reached target accuracy",
                Outcome::ExhaustedRounds => "exhausted max_rounds",
            };
            let final_accuracy = summary
                .records
                .last()
                .map(|r| r.test_accuracy)
                .unwrap_or(f64::NAN);
            println!(
                "{} after {} rounds (final test accuracy {:.4})",
                outcome, summary.manifest.rounds_used, final_accuracy
            );
            println!("wrote {}", summary.csv_path.display());
            println!("wrote {}", summary.manifest_path.display());
            Ok(())
        }
        Command::Compare { manifests } => {
            let report = compare::compare(&manifests)?;
            print!("{report}");
            Ok(())
        }
    }
}
