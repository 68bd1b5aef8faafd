//! Cross-run comparison: rounds-to-target per aggregator, as a ratio against
//! the FedAvg baseline.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};

use drag_core::simulator::Aggregator;

use crate::output::{read_manifest, Outcome, RunManifest};

fn aggregator_name(aggregator: Aggregator) -> &'static str {
    match aggregator {
        Aggregator::Fedavg => "fedavg",
        Aggregator::Drag => "drag",
        Aggregator::DragByzantine => "drag_byzantine",
    }
}

/// Checks that two manifests describe the same task: same model, data,
/// seed, and target accuracy. Returns the name of the first differing field.
fn mismatch(a: &RunManifest, b: &RunManifest) -> Option<&'static str> {
    if a.config.model != b.config.model {
        Some("model")
    } else if a.config.data != b.config.data {
        Some("data")
    } else if a.config.seed != b.config.seed {
        Some("seed")
    } else if a.config.target_accuracy != b.config.target_accuracy {
        Some("target_accuracy")
    } else {
        None
    }
}

/// Builds the comparison report for the given manifest files.
pub fn compare(paths: &[PathBuf]) -> Result<String> {
    if paths.len() < 2 {
        bail!("compare needs at least two manifests, got {}", paths.len());
    }
    let mut runs = Vec::with_capacity(paths.len());
    for path in paths {
        runs.push((path, read_manifest(path)?));
    }
    for (path, manifest) in &runs[1..] {
        if let Some(field) = mismatch(&runs[0].1, manifest) {
            bail!(
                "manifest {} does not match {}: field `{field}` differs",
                path.display(),
                runs[0].0.display()
            );
        }
    }

    // Ratios are relative to the FedAvg run when one is present, otherwise
    // to the first manifest.
    let baseline = runs
        .iter()
        .position(|(_, m)| m.config.aggregator == Aggregator::Fedavg)
        .unwrap_or(0);
    let baseline_rounds = runs[baseline].1.rounds_used;

    let mut report = String::new();
    let _ = writeln!(
        report,
        "baseline: {} ({} rounds)",
        aggregator_name(runs[baseline].1.config.aggregator),
        baseline_rounds
    );
    let _ = writeln!(
        report,
        "{:<16} {:>8} {:>18} {:>8}",
        "aggregator", "rounds", "outcome", "ratio"
    );
    for (_, manifest) in &runs {
        let ratio = manifest.rounds_used as f64 / baseline_rounds as f64;
        let outcome = match manifest.outcome {
            Outcome::ReachedTarget => "reached_target",
            Outcome::ExhaustedRounds => "exhausted_rounds",
        };
        let _ = writeln!(
            report,
            "{:<16} {:>8} {:>18} {:>8.3}",
            aggregator_name(manifest.config.aggregator),
            manifest.rounds_used,
            outcome,
            ratio
        );
    }
    Ok(report)
}
