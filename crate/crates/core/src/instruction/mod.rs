//! Multi-goal instructions: grammar, task graph and retrieval scheduling.

mod graph;
mod parse;
mod remote;
mod schedule;

pub use graph::{classify_dependency, Dependency, Task, TaskGraph, TaskId};
pub use parse::{parse, render};
pub use remote::{parse_instruction, RemoteParser};
pub use schedule::{execute, schedule, PlanStep, RetrievalPlan, StepKind, StepOutcome};

use crate::service::ServiceError;

#[derive(Debug, thiserror::Error)]
pub enum InstructionError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("invalid task graph: {0}")]
    InvalidGraph(String),
    #[error(transparent)]
    Service(#[from] ServiceError),
}
