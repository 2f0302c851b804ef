//! Queries over a frozen memory: flat and forest search, anchor-guided
//! retrieval and neighbor boosting.

pub mod anchor;
pub mod boost;
pub mod embed;
pub mod query;
pub mod search;

pub use anchor::{anchor_retrieve, combo_score, gaussian_factor, spatial_score};
pub use boost::{context_support, neighbor_boost};
pub use embed::{EmbedError, Embedder, HashEmbedder, RemoteEmbedder, DEFAULT_EMBEDDING_DIM};
pub use query::{
    rank_order, sort_candidates, AnchorScore, AnchorSupport, CandidateSource, Query, RankedCandidate,
    RetrievalResult, SearchMode,
};
pub use search::{flat_search, forest_search, neighborhood, SearchOutcome};

use crate::memory::Memory;
use crate::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("query embedding has dimension {got}, memory uses {expected}")]
    Dimension { got: usize, expected: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Runs `query` against `memory` in the query's mode.
///
/// Boosted mode runs the anchor stage first when an anchor is given and
/// then boosts the survivors; without an anchor it boosts the stage-one
/// candidates directly.
pub fn retrieve(memory: &Memory, embedder: &dyn Embedder, query: &Query) -> Result<RetrievalResult, RetrievalError> {
    query.validate()?;
    if embedder.dim() != memory.params.embedding_dim {
        return Err(RetrievalError::Dimension {
            got: embedder.dim(),
            expected: memory.params.embedding_dim,
        });
    }
    let target = embedder.embed(&query.target_text)?;
    let anchor = query.anchor_text.as_deref().map(|a| embedder.embed(a)).transpose()?;
    let plain = |o: SearchOutcome| RetrievalResult {
        candidates: o.candidates,
        visited: o.visited,
        diagnostic: None,
    };
    match query.mode {
        SearchMode::Flat => Ok(plain(flat_search(memory, &target, query.k))),
        SearchMode::Forest => Ok(plain(forest_search(memory, &target, query.k, query.beam_width))),
        SearchMode::Anchor => {
            let anchor = anchor.expect("validated: anchor mode has an anchor");
            anchor_retrieve(memory, &target, &anchor, query)
        }
        SearchMode::Boosted => {
            let mut result = match &anchor {
                Some(a) => anchor_retrieve(memory, &target, a, query)?,
                None => plain(anchor::stage_one(memory, &target, query)),
            };
            let contexts: Vec<Vec<f64>> = query
                .context_texts
                .iter()
                .map(|c| embedder.embed(c))
                .collect::<Result<_, _>>()?;
            result.visited += result.candidates.len() * contexts.len();
            result.candidates = neighbor_boost(
                memory,
                result.candidates,
                &contexts,
                query.hops,
                query.eta,
                query.context_threshold,
            )?;
            Ok(result)
        }
    }
}
