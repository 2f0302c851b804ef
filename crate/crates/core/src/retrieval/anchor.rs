use super::embed::unit_similarity;
use super::query::{sort_candidates, AnchorScore, AnchorSupport, CandidateSource, Query};
use super::search::{flat_search, forest_search, neighborhood, SearchOutcome};
use super::{RetrievalError, RetrievalResult};
use crate::memory::{Memory, TopoNode};
use crate::NodeId;

/// Gaussian distance factor `exp(-d^2 / (2 sigma^2))`.
pub fn gaussian_factor(distance: f64, sigma: f64) -> f64 {
    (-(distance * distance) / (2.0 * sigma * sigma)).exp()
}

/// Distance-weighted validation score `1 / (1 + d)`.
pub fn combo_score(distance: f64) -> f64 {
    1.0 / (1.0 + distance)
}

/// Semantic match of the candidate to the target, attenuated by a Gaussian
/// in its distance to the anchor.
pub fn spatial_score(candidate: &TopoNode, anchor: &TopoNode, target: &[f64], sigma: f64) -> f64 {
    let d = candidate.position.distance(&anchor.position);
    unit_similarity(target, &candidate.embedding) * gaussian_factor(d, sigma)
}

pub(crate) fn stage_one(memory: &Memory, target: &[f64], q: &Query) -> SearchOutcome {
    match q.candidate_source {
        CandidateSource::Forest => forest_search(memory, target, q.k, q.beam_width),
        CandidateSource::Flat => flat_search(memory, target, q.k),
    }
}

/// Best-matching node among `pool` at or above `threshold`: highest score,
/// then nearest to `origin`, then lowest id.
pub(crate) fn best_match(
    memory: &Memory,
    origin: NodeId,
    pool: &[NodeId],
    text: &[f64],
    threshold: f64,
) -> Option<(NodeId, f64, f64)> {
    let here = &memory.node(origin).position;
    let mut best: Option<(NodeId, f64, f64)> = None;
    for &id in pool {
        let node = memory.node(id);
        let s = unit_similarity(text, &node.embedding);
        if s < threshold {
            continue;
        }
        let d = here.distance(&node.position);
        let better = match best {
            None => true,
            Some((bid, bs, bd)) => s > bs || (s == bs && (d < bd || (d == bd && id < bid))),
        };
        if better {
            best = Some((id, s, d));
        }
    }
    best
}

/// Two-stage anchor-conditioned retrieval.
///
/// Stage one takes the top-`k` candidates for the target. Stage two looks
/// for the best anchor match inside each candidate's `hops` neighborhood;
/// candidates without one are dropped, the rest are rescored by their
/// distance to the matched anchor.
pub fn anchor_retrieve(
    memory: &Memory,
    target: &[f64],
    anchor: &[f64],
    q: &Query,
) -> Result<RetrievalResult, RetrievalError> {
    let anywhere = memory
        .map
        .nodes
        .iter()
        .any(|n| unit_similarity(anchor, &n.embedding) >= q.anchor_threshold);
    if !anywhere {
        return Ok(RetrievalResult {
            candidates: Vec::new(),
            visited: memory.len(),
            diagnostic: Some(format!(
                "no node matches anchor '{}' at or above {}",
                q.anchor_text.as_deref().unwrap_or(""),
                q.anchor_threshold
            )),
        });
    }
    let SearchOutcome { candidates, mut visited } = stage_one(memory, target, q);
    visited += memory.len();
    let mut survivors = Vec::new();
    for mut c in candidates {
        let pool = neighborhood(memory, c.node_id, q.hops)?;
        visited += pool.len();
        let Some((anchor_id, _, d)) = best_match(memory, c.node_id, &pool, anchor, q.anchor_threshold) else {
            continue;
        };
        let combo = combo_score(d);
        let spatial = c.s_sem * gaussian_factor(d, q.sigma);
        c.s_combo = Some(combo);
        c.s_spatial = Some(spatial);
        c.support = Some(AnchorSupport {
            anchor_node_id: anchor_id,
            distance: d,
        });
        c.final_score = match q.anchor_score {
            AnchorScore::Combo => c.s_sem * combo,
            AnchorScore::Gaussian => spatial,
        };
        survivors.push(c);
    }
    sort_candidates(&mut survivors);
    let diagnostic = survivors
        .is_empty()
        .then(|| "no candidate has a matching anchor in its neighborhood".to_string());
    Ok(RetrievalResult {
        candidates: survivors,
        visited,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{build_memory_from_places, MajoritySummarizer, MemoryParams};
    use crate::retrieval::{Embedder, HashEmbedder};
    use crate::Position;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn combo_and_gaussian_anchors() {
        assert_eq!(combo_score(0.0), 1.0);
        assert_eq!(combo_score(1.0), 0.5);
        assert_eq!(gaussian_factor(0.0, 2.0), 1.0);
        let sigma = 1.7;
        let d = sigma * 2f64.sqrt();
        assert!((gaussian_factor(d, sigma) - (-1.0f64).exp()).abs() < 1e-12);
    }

    fn memory(places: &[(f64, f64, &str)]) -> (Memory, HashEmbedder) {
        let emb = HashEmbedder::default();
        let places: Vec<(Position, String)> = places
            .iter()
            .map(|&(x, y, t)| (Position::planar(x, y), t.to_string()))
            .collect();
        let params = MemoryParams::default();
        let m = build_memory_from_places(&places, &params, &emb, &MajoritySummarizer).unwrap();
        (m, emb)
    }

    #[test]
    fn spatial_score_by_hand() {
        let (m, emb) = memory(&[(0.0, 0.0, "sofa"), (3.0, 4.0, "chair")]);
        let q = emb.embed("sofa").unwrap();
        // Same text: similarity 1; d = 5, sigma = 2 gives exp(-25/8).
        let s = spatial_score(m.node(0), m.node(1), &q, 2.0);
        assert!((s - (-25.0f64 / 8.0).exp()).abs() < 1e-12);
        assert!((spatial_score(m.node(0), m.node(0), &q, 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planted_decoy_is_pruned() {
        let (m, emb) = memory(&[
            (0.0, 0.0, "sofa"),
            (20.0, 0.0, "sofa"),
            (21.0, 0.0, "lamp"),
            (1.0, 0.0, "desk"),
            (19.0, 0.5, "chair"),
        ]);
        let q = Query::new("sofa").with_anchor("chair");
        let t = emb.embed("sofa").unwrap();
        let a = emb.embed("chair").unwrap();
        let r = anchor_retrieve(&m, &t, &a, &q).unwrap();
        assert_eq!(r.candidates.len(), 1);
        let top = &r.candidates[0];
        assert_eq!(top.node_id, 1);
        let sup = top.support.unwrap();
        assert_eq!(sup.anchor_node_id, 4);
        let d = (1.0f64 + 0.25).sqrt();
        assert!((sup.distance - d).abs() < 1e-12);
        assert!((top.final_score - top.s_sem / (1.0 + d)).abs() < 1e-12);
    }

    #[test]
    fn missing_anchor_gives_diagnostic() {
        let (m, emb) = memory(&[(0.0, 0.0, "sofa"), (1.0, 0.0, "lamp")]);
        let q = Query::new("sofa").with_anchor("aquarium");
        let r = anchor_retrieve(&m, &emb.embed("sofa").unwrap(), &emb.embed("aquarium").unwrap(), &q).unwrap();
        assert!(r.candidates.is_empty());
        assert!(r.diagnostic.unwrap().contains("aquarium"));
    }

    #[test]
    fn pruning_is_sound_against_exhaustive_scan() {
        let labels = ["sofa", "chair", "lamp", "desk", "rug"];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let pts: Vec<(f64, f64, &str)> = (0..60)
                .map(|_| (rng.gen_range(0.0..15.0), rng.gen_range(0.0..15.0), labels[rng.gen_range(0..5)]))
                .collect();
            let (m, emb) = memory(&pts);
            let hops = rng.gen_range(1..3);
            let q = Query {
                k: 60,
                hops,
                candidate_source: CandidateSource::Flat,
                ..Query::new("sofa").with_anchor("chair")
            };
            let t = emb.embed("sofa").unwrap();
            let a = emb.embed("chair").unwrap();
            let r = anchor_retrieve(&m, &t, &a, &q).unwrap();
            // Exhaustive: a node survives iff some other node labeled chair
            // lies within `hops` edges of it.
            let adj = m.adjacency();
            for node in &m.map.nodes {
                let mut seen = vec![false; m.len()];
                let mut layer = vec![node.id];
                seen[node.id as usize] = true;
                let mut found = false;
                for _ in 0..hops {
                    let mut next = Vec::new();
                    for &u in &layer {
                        for &(v, _) in &adj[u as usize] {
                            if !seen[v as usize] {
                                seen[v as usize] = true;
                                found |= m.node(v).description == "chair";
                                next.push(v);
                            }
                        }
                    }
                    layer = next;
                }
                let kept = r.candidates.iter().any(|c| c.node_id == node.id);
                let is_target = unit_similarity(&t, &node.embedding) >= 1.0 - 1e-12;
                if is_target {
                    assert_eq!(kept, found, "node {}", node.id);
                }
            }
        }
    }
}
