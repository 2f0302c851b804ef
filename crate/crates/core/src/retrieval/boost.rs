use super::anchor::best_match;
use super::query::{sort_candidates, RankedCandidate};
use super::search::neighborhood;
use super::RetrievalError;
use crate::memory::Memory;

/// Mean over `contexts` of the best context match in the candidate's
/// neighborhood; contexts without a match above `threshold` count as 0.
pub fn context_support(
    memory: &Memory,
    node: crate::NodeId,
    contexts: &[Vec<f64>],
    hops: usize,
    threshold: f64,
) -> Result<f64, RetrievalError> {
    if contexts.is_empty() {
        return Ok(0.0);
    }
    let pool = neighborhood(memory, node, hops)?;
    let total: f64 = contexts
        .iter()
        .map(|c| best_match(memory, node, &pool, c, threshold).map_or(0.0, |(_, s, _)| s))
        .sum();
    Ok(total / contexts.len() as f64)
}

/// Co-occurrence boost: `s_boost = s_sem * (1 + eta * support)`, where
/// support is [`context_support`]. The same factor scales each candidate's
/// incoming final score, so plain candidates end up ranked by `s_boost` and
/// anchor survivors keep their anchor weighting. Candidates are re-sorted.
pub fn neighbor_boost(
    memory: &Memory,
    mut candidates: Vec<RankedCandidate>,
    contexts: &[Vec<f64>],
    hops: usize,
    eta: f64,
    threshold: f64,
) -> Result<Vec<RankedCandidate>, RetrievalError> {
    for c in &mut candidates {
        let support = context_support(memory, c.node_id, contexts, hops, threshold)?;
        let factor = 1.0 + eta * support;
        c.s_boost = Some(c.s_sem * factor);
        c.final_score *= factor;
    }
    sort_candidates(&mut candidates);
    Ok(candidates)
}
