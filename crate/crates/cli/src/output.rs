//! Run outputs: the metrics CSV (one row per round) and the manifest JSON
//! that echoes the config and records the outcome.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use drag_core::simulator::{ExperimentConfig, RoundRecord};

/// Fixed metrics CSV header.
pub const METRICS_HEADER: &str =
    "round,train_loss,test_accuracy,grad_norm_sq,mean_lambda,max_lambda,num_attackers";

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ReachedTarget,
    ExhaustedRounds,
}

/// Everything needed to reproduce and compare a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub started_at: String,
    pub finished_at: String,
    pub outcome: Outcome,
    pub rounds_used: usize,
}

/// Renders the records as RFC-4180-style CSV with LF line endings. Floats
/// use Rust's shortest round-trip formatting, so parsing a field recovers
/// the exact `f64`. The lambda columns are empty for rounds that performed
/// no divergence scoring (fedavg mode).
pub fn metrics_csv(records: &[RoundRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for record in records {
        let _ = write!(
            out,
            "{},{},{},{}",
            record.round, record.train_loss, record.test_accuracy, record.grad_norm_sq
        );
        match (record.mean_lambda, record.max_lambda) {
            (Some(mean), Some(max)) => {
                let _ = write!(out, ",{mean},{max}");
            }
            _ => out.push_str(",,"),
        }
        let _ = writeln!(out, ",{}", record.attackers.len());
    }
    out
}

/// Determines the outcome from the records and the configured target.
pub fn outcome_of(config: &ExperimentConfig, records: &[RoundRecord]) -> Outcome {
    let reached = match (config.target_accuracy, records.last()) {
        (Some(target), Some(last)) => last.test_accuracy >= target,
        _ => false,
    };
    if reached {
        Outcome::ReachedTarget
    } else {
        Outcome::ExhaustedRounds
    }
}

/// Writes `metrics.csv` and `manifest.json` into `dir`, creating it first.
pub fn write_run_outputs(
    dir: &Path,
    manifest: &RunManifest,
    records: &[RoundRecord],
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let csv_path = dir.join("metrics.csv");
    fs::write(&csv_path, metrics_csv(records))
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    let manifest_path = dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(manifest)?;
    json.push('\n');
    fs::write(&manifest_path, json)
        .with_context(|| format!("cannot write {}", manifest_path.display()))?;
    Ok((csv_path, manifest_path))
}

/// Loads a manifest written by [`write_run_outputs`].
pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    Ok(serde_json::from_str(&text)
        .with_context(|| format!("manifest {} is malformed", path.display()))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(round: usize, lambda: Option<f64>) -> RoundRecord {
        RoundRecord {
            round,
            train_loss: 1.0 / 3.0,
            test_accuracy: 0.625,
            grad_norm_sq: 2.5e-3,
            mean_lambda: lambda,
            max_lambda: lambda.map(|l| l * 2.0),
            participants: vec![0, 1],
            attackers: vec![1],
            attack_scalars: vec![-0.5],
            degenerate_reference: false,
        }
    }

    #[test]
    fn csv_has_fixed_header_and_row_per_record() {
        let csv = metrics_csv(&[record(0, Some(0.1)), record(1, None)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], METRICS_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(",0.1,0.2,1"));
        assert!(lines[2].contains(",,,"), "lambda columns empty: {}", lines[2]);
        assert!(csv.ends_with('\n'));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn float_fields_round_trip_exactly() {
        let rec = record(0, Some(0.1 + 1e-17));
        let csv = metrics_csv(&[rec.clone()]);
        let row = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), rec.train_loss);
        assert_eq!(fields[2].parse::<f64>().unwrap(), rec.test_accuracy);
        assert_eq!(fields[3].parse::<f64>().unwrap(), rec.grad_norm_sq);
        assert_eq!(fields[4].parse::<f64>().unwrap(), rec.mean_lambda.unwrap());
    }
}
