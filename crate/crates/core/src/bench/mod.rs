//! Seeded benchmark suites, retrieval and navigation comparisons,
//! ablations and result export.

mod export;
mod generate;
mod run;

pub use export::{export_results, read_csv, read_json, write_csv, write_json, ExportFormat, CSV_COLUMNS, METRICS_SCHEMA};
pub use generate::{generate_benchmark, read_suite, write_suite, BenchParams, BenchmarkCase};
pub use run::{
    check_neutrality, navigate_case, run_ablations, run_navigation_bench, run_retrieval_bench, CaseOutcome,
    MetricsRecord, NavConfig, PreparedCase, RunSettings, Variant,
};

use crate::instruction::InstructionError;
use crate::memory::MemoryError;
use crate::retrieval::RetrievalError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("benchmark generation failed: {0}")]
    Generation(String),
    #[error("bad bench configuration: {0}")]
    Config(String),
    #[error("no records to export")]
    Empty,
    #[error("harness neutrality violated: {0}")]
    Neutrality(String),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Instruction(#[from] InstructionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
