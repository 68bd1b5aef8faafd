//! Config loading: a JSON file whose keys match
//! [`ExperimentConfig`](drag_core::simulator::ExperimentConfig) field names,
//! with `--set key=value` overrides applied on top.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

use drag_core::simulator::ExperimentConfig;

/// Loads `path`, applies `key=value` overrides, and validates the result.
///
/// An empty (or whitespace-only) file is treated as `{}` so a config can be
/// assembled entirely from overrides. Override values are parsed as JSON
/// when possible, falling back to strings, and dotted keys address nested
/// fields (`drag.c`, `attack.variance`). The bare keys `c` and `alpha` are
/// shorthands for `drag.c` and `drag.alpha`.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut value: Value = if text.trim().is_empty() {
        Value::Object(Default::default())
    } else {
        serde_json::from_str(&text)
            .with_context(|| format!("config file {} is not valid JSON", path.display()))?
    };
    for entry in overrides {
        apply_override(&mut value, entry)?;
    }
    let config: ExperimentConfig =
        serde_json::from_value(value).context("config does not match the expected schema")?;
    config.validate()?;
    Ok(config)
}

fn apply_override(root: &mut Value, entry: &str) -> Result<()> {
    let Some((key, raw)) = entry.split_once('=') else {
        bail!("override `{entry}` is not of the form key=value");
    };
    let path = match key {
        "c" => "drag.c",
        "alpha" => "drag.alpha",
        other => other,
    };
    let parsed: Value = serde_json::from_str(raw).unwrap_or(Value::String(raw.to_owned()));

    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        if segment.is_empty() {
            bail!("override key `{key}` has an empty path segment");
        }
        let map = cursor
            .as_object_mut()
            .with_context(|| format!("override key `{key}` descends into a non-object"))?;
        if i + 1 == segments.len() {
            map.insert((*segment).to_owned(), parsed);
            return Ok(());
        }
        cursor = map
            .entry((*segment).to_owned())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one segment");
}
