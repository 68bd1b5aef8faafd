//! Library surface of the `drag` experiment runner: config parsing, run
//! execution with CSV/manifest outputs, dataset import, and run comparison.

pub mod compare;
pub mod config;
pub mod dataset_csv;
pub mod output;

use std::path::{Path, PathBuf};

use anyhow::Result;
use chrono::{SecondsFormat, Utc};

use drag_core::simulator::{
    DataSpec, ExecOptions, Experiment, ExperimentConfig, RoundRecord,
};

use crate::output::{outcome_of, write_run_outputs, RunManifest};

/// Result of a completed `run` invocation.
pub struct RunSummary {
    pub manifest: RunManifest,
    pub records: Vec<RoundRecord>,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

fn build_experiment(config: ExperimentConfig) -> Result<Experiment> {
    match &config.data {
        DataSpec::Csv { train, test } => {
            let train = dataset_csv::load_dataset_csv(Path::new(train))?;
            let test = dataset_csv::load_dataset_csv(Path::new(test))?;
            Ok(Experiment::with_datasets(config, train, test)?)
        }
        _ => Ok(Experiment::new(config)?),
    }
}

/// Runs `config` to completion and writes `metrics.csv` plus
/// `manifest.json` into `out_dir`. Nothing is written if the config fails
/// to validate or the run errors.
pub fn run_to_dir(config: ExperimentConfig, out_dir: &Path, options: ExecOptions) -> Result<RunSummary> {
    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    let mut experiment = build_experiment(config.clone())?.with_options(options);
    let records = experiment.run()?;
    let finished_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);

    let manifest = RunManifest {
        outcome: outcome_of(&config, &records),
        rounds_used: records.len(),
        config,
        started_at,
        finished_at,
    };
    let (csv_path, manifest_path) = write_run_outputs(out_dir, &manifest, &records)?;
    Ok(RunSummary {
        manifest,
        records,
        csv_path,
        manifest_path,
    })
}
