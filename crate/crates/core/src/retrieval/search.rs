use std::collections::VecDeque;

use super::embed::{cosine, unit_similarity};
use super::query::{sort_candidates, RankedCandidate};
use super::RetrievalError;
use crate::memory::{ForestId, Memory};
use crate::NodeId;

/// Ranked candidates plus the number of similarity evaluations it took.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub candidates: Vec<RankedCandidate>,
    pub visited: usize,
}

/// Scores every node against `query` and keeps the best `k`.
pub fn flat_search(memory: &Memory, query: &[f64], k: usize) -> SearchOutcome {
    let mut candidates: Vec<RankedCandidate> = memory
        .map
        .nodes
        .iter()
        .map(|n| RankedCandidate::semantic(n.id, unit_similarity(query, &n.embedding)))
        .collect();
    sort_candidates(&mut candidates);
    candidates.truncate(k);
    SearchOutcome {
        candidates,
        visited: memory.len(),
    }
}

/// Beam descent through the forest.
///
/// Roots are scored against their centroids and the best `beam_width` kept;
/// every kept internal node then keeps its own best `beam_width` children,
/// down to the leaves. The leaves reached are ranked by semantic score.
/// When `beam_width` is at least the forest's largest fan-out (roots
/// included) every leaf is reached and the result equals [`flat_search`].
pub fn forest_search(memory: &Memory, query: &[f64], k: usize, beam_width: usize) -> SearchOutcome {
    let forest = &memory.forest;
    let mut visited = 0usize;
    let best = |ids: &[ForestId], visited: &mut usize| -> Vec<ForestId> {
        *visited += ids.len();
        let mut scored: Vec<(f64, ForestId)> = ids
            .iter()
            .map(|&id| (cosine(query, &forest.node(id).centroid_feature), id))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(beam_width);
        scored.into_iter().map(|(_, id)| id).collect()
    };
    let mut stack = best(&forest.roots, &mut visited);
    let mut leaves: Vec<NodeId> = Vec::new();
    while let Some(id) = stack.pop() {
        let node = forest.node(id);
        match node.leaf_ref {
            Some(leaf) => leaves.push(leaf),
            None => stack.extend(best(&node.children, &mut visited)),
        }
    }
    let mut candidates: Vec<RankedCandidate> = leaves
        .into_iter()
        .map(|id| RankedCandidate::semantic(id, unit_similarity(query, &memory.node(id).embedding)))
        .collect();
    sort_candidates(&mut candidates);
    candidates.truncate(k);
    SearchOutcome { candidates, visited }
}

/// Nodes within `hops` edges of `seed`, excluding the seed, ascending.
pub fn neighborhood(memory: &Memory, seed: NodeId, hops: usize) -> Result<Vec<NodeId>, RetrievalError> {
    if seed as usize >= memory.len() {
        return Err(RetrievalError::UnknownNode(seed));
    }
    let mut depth = vec![usize::MAX; memory.len()];
    depth[seed as usize] = 0;
    let mut queue = VecDeque::from([seed]);
    let mut out = Vec::new();
    while let Some(u) = queue.pop_front() {
        let du = depth[u as usize];
        if du == hops {
            continue;
        }
        for &(v, _) in memory.neighbors(u) {
            if depth[v as usize] == usize::MAX {
                depth[v as usize] = du + 1;
                out.push(v);
                queue.push_back(v);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{build_memory_from_places, MajoritySummarizer, MemoryParams};
    use crate::retrieval::{Embedder, HashEmbedder};
    use crate::Position;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    const WORDS: &[&str] = &[
        "sofa", "chair", "lamp", "desk", "bed", "plant", "rug", "clock", "piano", "mirror",
        "grey", "wooden", "red", "small", "large", "old",
    ];

    fn random_memory(rng: &mut ChaCha8Rng, n: usize, params: &MemoryParams) -> Memory {
        let places: Vec<(Position, String)> = (0..n)
            .map(|_| {
                let words = rng.gen_range(1..4);
                let text = (0..words)
                    .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
                    .collect::<Vec<_>>()
                    .join(" ");
                (Position::planar(rng.gen_range(0.0..30.0), rng.gen_range(0.0..30.0)), text)
            })
            .collect();
        let emb = HashEmbedder::new(params.embedding_dim);
        build_memory_from_places(&places, params, &emb, &MajoritySummarizer).unwrap()
    }

    fn small_params() -> MemoryParams {
        MemoryParams {
            embedding_dim: 64,
            tau: 0.55,
            ..Default::default()
        }
    }

    /// Independent exhaustive scan: plain cosine, own sort.
    fn oracle_top_k(memory: &Memory, q: &[f64], k: usize) -> Vec<(NodeId, f64)> {
        let mut all: Vec<(NodeId, f64)> = memory
            .map
            .nodes
            .iter()
            .map(|n| {
                let c: f64 = q.iter().zip(&n.embedding).map(|(a, b)| a * b).sum();
                (n.id, (1.0 + c.clamp(-1.0, 1.0)) / 2.0)
            })
            .collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    #[test]
    fn flat_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let params = small_params();
        let m = random_memory(&mut rng, 200, &params);
        let emb = HashEmbedder::new(64);
        for text in ["sofa", "grey chair", "old wooden piano", "lamp"] {
            let q = emb.embed(text).unwrap();
            let got = flat_search(&m, &q, 10);
            assert_eq!(got.visited, 200);
            let want = oracle_top_k(&m, &q, 10);
            let got: Vec<(NodeId, f64)> = got.candidates.iter().map(|c| (c.node_id, c.s_sem)).collect();
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g.0, w.0);
                assert!((g.1 - w.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn k_larger_than_memory_returns_everything_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_memory(&mut rng, 15, &small_params());
        let q = HashEmbedder::new(64).embed("desk").unwrap();
        let r = flat_search(&m, &q, 100);
        assert_eq!(r.candidates.len(), 15);
        assert!(r.candidates.windows(2).all(|w| w[0].final_score >= w[1].final_score));
    }

    #[test]
    fn self_retrieval_ranks_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = random_memory(&mut rng, 40, &small_params());
        // Make node 17's text unique so there is no tie.
        let emb = HashEmbedder::new(64);
        m.map.nodes[17].description = "aquarium treadmill".into();
        m.map.nodes[17].embedding = emb.embed("aquarium treadmill").unwrap();
        let q = emb.embed("aquarium treadmill").unwrap();
        assert_eq!(flat_search(&m, &q, 3).candidates[0].node_id, 17);
    }

    #[test]
    fn wide_beam_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let emb = HashEmbedder::new(64);
        for _ in 0..10 {
            let n = rng.gen_range(5..120);
            let m = random_memory(&mut rng, n, &small_params());
            let beam = m.forest.max_branching();
            let q = emb.embed(WORDS[rng.gen_range(0..WORDS.len())]).unwrap();
            let f = forest_search(&m, &q, 10, beam);
            let flat = flat_search(&m, &q, 10);
            assert_eq!(f.candidates, flat.candidates);
        }
    }

    #[test]
    fn single_root_is_descended() {
        let places: Vec<(Position, String)> = (0..6)
            .map(|k| (Position::planar(k as f64 * 0.3, 0.0), "sofa".to_string()))
            .collect();
        let params = MemoryParams { embedding_dim: 64, ..Default::default() };
        let m = build_memory_from_places(&places, &params, &HashEmbedder::new(64), &MajoritySummarizer).unwrap();
        assert_eq!(m.forest.roots.len(), 1);
        let q = HashEmbedder::new(64).embed("sofa").unwrap();
        let r = forest_search(&m, &q, 1, 1);
        assert_eq!(r.candidates.len(), 1);
        assert!(r.visited > 1);
    }

    #[test]
    fn three_cluster_query_lands_in_matching_subtree() {
        let groups = [
            ["sofa", "television", "remote", "rug"],
            ["bed", "wardrobe", "pillow", "curtain"],
            ["fridge", "kettle", "stool", "bin"],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut places = Vec::new();
        for (g, words) in groups.iter().enumerate() {
            for k in 0..12 {
                let x = g as f64 * 50.0 + rng.gen_range(0.0..4.0);
                let y = rng.gen_range(0.0..4.0);
                places.push((Position::planar(x, y), words[k % 4].to_string()));
            }
        }
        let params = MemoryParams {
            embedding_dim: 64,
            omega: 0.8,
            tau: 0.2,
            ..Default::default()
        };
        let emb = HashEmbedder::new(64);
        let m = build_memory_from_places(&places, &params, &emb, &MajoritySummarizer).unwrap();
        let roots: Vec<BTreeSet<NodeId>> = m
            .forest
            .roots
            .iter()
            .map(|&r| m.forest.leaves_under(r).into_iter().collect())
            .collect();
        assert_eq!(roots.len(), 3);
        let q = emb.embed("wardrobe").unwrap();
        let f = forest_search(&m, &q, 1, 2);
        let top = f.candidates[0].node_id;
        assert!((12..24).contains(&top));
        assert!(roots.iter().any(|r| r.contains(&top) && r.iter().all(|&i| (12..24).contains(&i))));
        // Three identical "wardrobe" nodes tie; agreement is on the score.
        assert_eq!(f.candidates[0].s_sem, flat_search(&m, &q, 1).candidates[0].s_sem);
        assert!(f.visited < m.len());
    }

    /// Hop distances by Floyd-Warshall over unit edge lengths.
    fn hop_oracle(m: &Memory) -> Vec<Vec<usize>> {
        let n = m.len();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for e in &m.map.edges {
            d[e.i as usize][e.j as usize] = 1;
            d[e.j as usize][e.i as usize] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn neighborhood_matches_hop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..5 {
            let m = random_memory(&mut rng, 80, &small_params());
            let d = hop_oracle(&m);
            for hops in 1..=3 {
                for seed in 0..m.len() {
                    let want: Vec<NodeId> = (0..m.len())
                        .filter(|&j| j != seed && d[seed][j] <= hops)
                        .map(|j| j as NodeId)
                        .collect();
                    assert_eq!(neighborhood(&m, seed as NodeId, hops).unwrap(), want);
                }
            }
        }
    }

    #[test]
    fn neighborhood_small_cases() {
        let places: Vec<(Position, String)> = [(0.0, "a"), (1.0, "b"), (2.0, "c"), (10.0, "d")]
            .iter()
            .map(|&(x, t)| (Position::planar(x, 0.0), t.to_string()))
            .collect();
        let params = MemoryParams { embedding_dim: 16, delta_spatial: 1.5, ..Default::default() };
        let m = build_memory_from_places(&places, &params, &HashEmbedder::new(16), &MajoritySummarizer).unwrap();
        assert_eq!(neighborhood(&m, 1, 1).unwrap(), vec![0, 2]);
        assert_eq!(neighborhood(&m, 0, 1).unwrap(), vec![1]);
        assert_eq!(neighborhood(&m, 0, 2).unwrap(), vec![1, 2]);
        assert!(neighborhood(&m, 3, 1).unwrap().is_empty());
        assert!(matches!(neighborhood(&m, 9, 1), Err(RetrievalError::UnknownNode(9))));
    }
}
