use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::MetricsRecord;
use super::BenchError;

/// JSON Schema of the exported JSON document.
pub const METRICS_SCHEMA: &str = include_str!("../../schemas/metrics.schema.json");

/// CSV column order.
pub const CSV_COLUMNS: [&str; 12] = [
    "suite",
    "config",
    "cases",
    "queries",
    "top1_accuracy",
    "retrieval_time_ms",
    "nodes_visited",
    "success_rate",
    "travel_distance",
    "total_task_time_s",
    "semantic_penalty",
    "lambda",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

fn non_empty(records: &[MetricsRecord]) -> Result<(), BenchError> {
    if records.is_empty() {
        Err(BenchError::Empty)
    } else {
        Ok(())
    }
}

pub fn write_csv(records: &[MetricsRecord], path: &Path) -> Result<(), BenchError> {
    non_empty(records)?;
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricsRecord>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Writes the records as a JSON array and the schema beside it as
/// `<stem>.schema.json`.
pub fn write_json(records: &[MetricsRecord], path: &Path) -> Result<(), BenchError> {
    non_empty(records)?;
    fs::write(path, serde_json::to_string_pretty(records)?)?;
    fs::write(schema_path(path), METRICS_SCHEMA)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<Vec<MetricsRecord>, BenchError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn schema_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    path.with_file_name(format!("{stem}.schema.json"))
}

/// Writes `records` to `path` in `format`.
pub fn export_results(records: &[MetricsRecord], path: &Path, format: ExportFormat) -> Result<(), BenchError> {
    match format {
        ExportFormat::Csv => write_csv(records, path),
        ExportFormat::Json => write_json(records, path),
    }
}
