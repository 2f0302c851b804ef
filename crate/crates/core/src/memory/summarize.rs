use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ForestNode;
use crate::service::{post_json, ServiceError};

/// Maximum length, in characters, of a generated cluster summary.
pub const SUMMARY_CAP: usize = 240;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub label: String,
    pub summary: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SummaryError {
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("summary provider returned an empty label")]
    EmptyLabel,
    #[error("{0}")]
    Other(String),
}

/// Produces a label and summary for a newly merged cluster.
pub trait Summarizer {
    fn summarize(&self, children: &[&ForestNode]) -> Result<ClusterSummary, SummaryError>;
}

/// Majority child label (ties to the lexicographically smallest) and the
/// child summaries joined with "; ", capped at [`SUMMARY_CAP`] characters.
#[derive(Debug, Clone, Copy, Default)]
pub struct MajoritySummarizer;

impl Summarizer for MajoritySummarizer {
    fn summarize(&self, children: &[&ForestNode]) -> Result<ClusterSummary, SummaryError> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for c in children {
            *counts.entry(c.label.as_str()).or_default() += 1;
        }
        // BTreeMap iterates in label order, so `max_by_key` would pick the
        // last of equal counts; scan for the first maximum instead.
        let mut label = "";
        let mut best = 0;
        for (l, &n) in &counts {
            if n > best {
                best = n;
                label = l;
            }
        }
        let joined = children
            .iter()
            .map(|c| c.summary.as_str())
            .collect::<Vec<_>>()
            .join("; ");
        let summary: String = joined.chars().take(SUMMARY_CAP).collect();
        Ok(ClusterSummary {
            label: label.to_string(),
            summary,
        })
    }
}

/// Label and summary for a cluster. Provider failures fall back to
/// [`MajoritySummarizer`], so a forest build never fails here.
pub fn summarize_cluster(children: &[&ForestNode], provider: &dyn Summarizer) -> ClusterSummary {
    match provider.summarize(children) {
        Ok(s) if !s.label.trim().is_empty() => s,
        Ok(_) => {
            log::warn!("summary provider returned an empty label; using majority label");
            fallback(children)
        }
        Err(e) => {
            log::warn!("summary provider failed ({e}); using majority label");
            fallback(children)
        }
    }
}

fn fallback(children: &[&ForestNode]) -> ClusterSummary {
    MajoritySummarizer
        .summarize(children)
        .expect("majority summarizer is infallible")
}

#[derive(Serialize)]
struct SummaryRequest<'a> {
    children: Vec<ChildText<'a>>,
}

#[derive(Serialize)]
struct ChildText<'a> {
    label: &'a str,
    summary: &'a str,
}

/// Language-model backed summarizer:
/// `POST {"children": [{"label", "summary"}]}` → `{"label", "summary"}`.
#[derive(Debug, Clone)]
pub struct RemoteSummarizer {
    url: String,
}

impl RemoteSummarizer {
    pub fn new(url: impl Into<String>) -> Self {
        Self { url: url.into() }
    }
}

impl Summarizer for RemoteSummarizer {
    fn summarize(&self, children: &[&ForestNode]) -> Result<ClusterSummary, SummaryError> {
        let req = SummaryRequest {
            children: children
                .iter()
                .map(|c| ChildText {
                    label: &c.label,
                    summary: &c.summary,
                })
                .collect(),
        };
        let mut out: ClusterSummary = post_json(&self.url, &req)?;
        if out.label.trim().is_empty() {
            return Err(SummaryError::EmptyLabel);
        }
        out.summary = out.summary.chars().take(SUMMARY_CAP).collect();
        Ok(out)
    }
}
