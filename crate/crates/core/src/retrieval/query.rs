use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::RetrievalError;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Exhaustive scan over every node.
    Flat,
    /// Beam descent through the semantic forest.
    Forest,
    /// Two-stage anchor-conditioned retrieval.
    Anchor,
    /// Anchor stage (when an anchor is given) followed by neighbor boosting.
    #[default]
    Boosted,
}

/// Where stage-one candidates come from in the anchor and boosted modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateSource {
    #[default]
    Forest,
    Flat,
}

/// How a surviving candidate's distance to its anchor enters the final
/// score in anchor mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorScore {
    /// `s_sem / (1 + d)`.
    #[default]
    Combo,
    /// `s_sem * exp(-d^2 / (2 sigma^2))`.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Query {
    #[serde(rename = "target", alias = "target_text")]
    pub target_text: String,
    #[serde(rename = "anchor", alias = "anchor_text", skip_serializing_if = "Option::is_none")]
    pub anchor_text: Option<String>,
    #[serde(rename = "context", alias = "context_texts")]
    pub context_texts: Vec<String>,
    pub k: usize,
    pub hops: usize,
    /// Spatial scale of the Gaussian anchor score, meters.
    pub sigma: f64,
    /// Neighbor boost coefficient.
    pub eta: f64,
    pub beam_width: usize,
    pub mode: SearchMode,
    /// Minimum mapped cosine for a node to count as an anchor match.
    pub anchor_threshold: f64,
    /// Minimum mapped cosine for a neighbor to count as a context match.
    pub context_threshold: f64,
    pub candidate_source: CandidateSource,
    pub anchor_score: AnchorScore,
}

impl Default for Query {
    fn default() -> Self {
        Self {
            target_text: String::new(),
            anchor_text: None,
            context_texts: Vec::new(),
            k: 10,
            hops: 1,
            sigma: 2.0,
            eta: 0.3,
            beam_width: 4,
            mode: SearchMode::default(),
            anchor_threshold: 0.55,
            context_threshold: 0.55,
            candidate_source: CandidateSource::default(),
            anchor_score: AnchorScore::default(),
        }
    }
}

impl Query {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target_text: target.into(),
            ..Default::default()
        }
    }

    pub fn with_anchor(mut self, anchor: impl Into<String>) -> Self {
        self.anchor_text = Some(anchor.into());
        self
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context_texts.push(context.into());
        self
    }

    pub fn with_mode(mut self, mode: SearchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        let fail = |m: &str| Err(RetrievalError::InvalidQuery(m.to_string()));
        if self.target_text.trim().is_empty() {
            return fail("target text is empty");
        }
        if self.k == 0 {
            return fail("k must be at least 1");
        }
        if self.hops == 0 {
            return fail("hops must be at least 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return fail("sigma must be positive");
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return fail("eta must be non-negative");
        }
        if self.beam_width == 0 {
            return fail("beam_width must be at least 1");
        }
        for t in [self.anchor_threshold, self.context_threshold] {
            if !(0.0..=1.0).contains(&t) {
                return fail("match thresholds must lie in [0, 1]");
            }
        }
        if self.mode == SearchMode::Anchor && self.anchor_text.is_none() {
            return fail("anchor mode needs an anchor text");
        }
        if self.anchor_text.as_deref().is_some_and(|a| a.trim().is_empty()) {
            return fail("anchor text is empty");
        }
        if self.context_texts.iter().any(|c| c.trim().is_empty()) {
            return fail("context text is empty");
        }
        Ok(())
    }
}

/// The anchor node that validated a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorSupport {
    pub anchor_node_id: NodeId,
    /// Euclidean distance candidate to anchor, meters.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub node_id: NodeId,
    pub s_sem: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s_spatial: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s_combo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s_boost: Option<f64>,
    pub final_score: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub support: Option<AnchorSupport>,
}

impl RankedCandidate {
    pub fn semantic(node_id: NodeId, s_sem: f64) -> Self {
        Self {
            node_id,
            s_sem,
            s_spatial: None,
            s_combo: None,
            s_boost: None,
            final_score: s_sem,
            support: None,
        }
    }
}

/// Descending score, then ascending node id.
pub fn rank_order(a: &RankedCandidate, b: &RankedCandidate) -> Ordering {
    b.final_score
        .total_cmp(&a.final_score)
        .then(a.node_id.cmp(&b.node_id))
}

pub fn sort_candidates(c: &mut [RankedCandidate]) {
    c.sort_by(rank_order);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub candidates: Vec<RankedCandidate>,
    /// Number of similarity evaluations spent on the search.
    pub visited: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

impl RetrievalResult {
    pub fn top(&self) -> Option<NodeId> {
        self.candidates.first().map(|c| c.node_id)
    }
}
