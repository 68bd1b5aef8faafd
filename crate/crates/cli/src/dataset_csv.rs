//! CSV dataset import: one example per row, columns `f0,...,f{d-1},label`,
//! header row required, labels as base-10 integers.

use std::path::Path;

use anyhow::{bail, Context, Result};

use drag_core::data::Dataset;
use drag_core::models::Example;

/// Loads a dataset from `path`. The class count is inferred as
/// `max label + 1`.
pub fn load_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("cannot open dataset file {}", path.display()))?;

    let headers = reader
        .headers()
        .with_context(|| format!("{}: missing header row", path.display()))?
        .clone();
    if headers.len() < 2 {
        bail!(
            "{}: expected at least one feature column and a label column",
            path.display()
        );
    }
    let dim = headers.len() - 1;
    for (i, name) in headers.iter().take(dim).enumerate() {
        let expected = format!("f{i}");
        if name != expected {
            bail!(
                "{}: header column {} is `{name}`, expected `{expected}`",
                path.display(),
                i
            );
        }
    }
    if &headers[dim] != "label" {
        bail!(
            "{}: last header column is `{}`, expected `label`",
            path.display(),
            &headers[dim]
        );
    }

    let mut examples = Vec::new();
    let mut max_label = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), row + 2))?;
        if record.len() != dim + 1 {
            bail!(
                "{}: row {} has {} columns, expected {}",
                path.display(),
                row + 2,
                record.len(),
                dim + 1
            );
        }
        let mut features = Vec::with_capacity(dim);
        for value in record.iter().take(dim) {
            let parsed: f64 = value
                .trim()
                .parse()
                .with_context(|| format!("{}: row {}: bad feature `{value}`", path.display(), row + 2))?;
            features.push(parsed);
        }
        let label: usize = record[dim]
            .trim()
            .parse()
            .with_context(|| format!("{}: row {}: bad label `{}`", path.display(), row + 2, &record[dim]))?;
        max_label = max_label.max(label);
        examples.push(Example::new(features, label));
    }
    Ok(Dataset::new(examples, max_label + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(contents.as_bytes()).unwrap();
        file
    }

    #[test]
    fn loads_a_well_formed_file() {
        let file = write_csv("f0,f1,label\n0.5,-1.5,0\n2.0,3.25,1\n");
        let ds = load_dataset_csv(file.path()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(ds.feature_dim(), 2);
        assert_eq!(ds.examples()[0].features, vec![0.5, -1.5]);
        assert_eq!(ds.examples()[1].label, 1);
    }

    #[test]
    fn rejects_wrong_header_names() {
        let file = write_csv("x0,x1,label\n0.5,-1.5,0\n");
        let err = load_dataset_csv(file.path()).unwrap_err();
        assert!(err.to_string().contains("expected `f0`"), "{err}");

        let file = write_csv("f0,f1,class\n0.5,-1.5,0\n");
        let err = load_dataset_csv(file.path()).unwrap_err();
        assert!(err.to_string().contains("expected `label`"), "{err}");
    }

    #[test]
    fn rejects_bad_values() {
        let file = write_csv("f0,label\nabc,0\n");
        assert!(load_dataset_csv(file.path()).is_err());
        let file = write_csv("f0,label\n1.0,-3\n");
        assert!(load_dataset_csv(file.path()).is_err());
    }
}
