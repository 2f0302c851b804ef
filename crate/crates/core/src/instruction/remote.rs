use serde::Serialize;

use super::graph::TaskGraph;
use super::parse::parse;
use super::InstructionError;
use crate::service::post_json;

#[derive(Serialize)]
struct ParseRequest<'a> {
    instruction: &'a str,
}

/// Language-model instruction parser: `POST {"instruction"}` → task graph
/// JSON. Responses are validated before they are accepted.
#[derive(Debug, Clone)]
pub struct RemoteParser {
    url: String,
}

impl RemoteParser {
    pub fn new(url: impl Into<String>) -> Self {
        Self { url: url.into() }
    }

    pub fn parse(&self, instruction: &str) -> Result<TaskGraph, InstructionError> {
        let graph: TaskGraph = post_json(&self.url, &ParseRequest { instruction })?;
        graph.validate()?;
        Ok(graph)
    }
}

/// Parses with `remote` when given, falling back to the grammar if the
/// service fails or returns an invalid graph.
pub fn parse_instruction(instruction: &str, remote: Option<&RemoteParser>) -> Result<TaskGraph, InstructionError> {
    if let Some(r) = remote {
        match r.parse(instruction) {
            Ok(g) => return Ok(g),
            Err(e) => log::warn!("instruction service failed ({e}); using the built-in grammar"),
        }
    }
    parse(instruction)
}
