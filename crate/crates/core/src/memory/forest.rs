//! Semantic forest: average-linkage agglomerative clustering over the
//! hybrid node similarity, stopped at a similarity threshold.
//!
//! The raw dendrogram is binary. It is regrouped top-down into a tree with
//! up to `max_children` children per node by repeatedly splitting the
//! largest merge under each node, which gives wide, roughly balanced trees
//! that beam search can prune.

use serde::{Deserialize, Serialize};

use super::similarity::{fuse_features, pairwise_similarity};
use super::summarize::{summarize_cluster, Summarizer};
use super::{MemoryError, MemoryParams, TopologicalMap};
use crate::retrieval::embed::{content_words, normalize};
use crate::NodeId;

/// Identifier of a forest node. Leaves are `0..n` (leaf `k` refers to map
/// node `k`); internal nodes follow.
pub type ForestId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestNode {
    pub id: ForestId,
    pub children: Vec<ForestId>,
    pub leaf_ref: Option<NodeId>,
    /// Renormalized mean of the fused features of all descendant leaves.
    pub centroid_feature: Vec<f64>,
    pub summary: String,
    pub label: String,
    /// Average-linkage similarity at which this cluster was formed.
    pub merge_similarity: Option<f64>,
    pub leaf_count: usize,
}

impl ForestNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemanticForest {
    pub roots: Vec<ForestId>,
    pub nodes: Vec<ForestNode>,
}

impl SemanticForest {
    pub fn node(&self, id: ForestId) -> &ForestNode {
        &self.nodes[id as usize]
    }

    /// Map node ids of all leaves under `id`, ascending.
    pub fn leaves_under(&self, id: ForestId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(f) = stack.pop() {
            let n = self.node(f);
            match n.leaf_ref {
                Some(r) => out.push(r),
                None => stack.extend(&n.children),
            }
        }
        out.sort_unstable();
        out
    }

    /// Largest fan-out in the forest, counting the set of roots as the
    /// children of a virtual super-root.
    pub fn max_branching(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.children.len())
            .max()
            .unwrap_or(0)
            .max(self.roots.len())
    }

    /// Number of levels from the roots down to the deepest leaf.
    pub fn depth(&self) -> usize {
        fn go(f: &SemanticForest, id: ForestId) -> usize {
            1 + f
                .node(id)
                .children
                .iter()
                .map(|&c| go(f, c))
                .max()
                .unwrap_or(0)
        }
        self.roots.iter().map(|&r| go(self, r)).max().unwrap_or(0)
    }

    /// Leaf sets of each root, in root order.
    pub fn root_partition(&self) -> Vec<Vec<NodeId>> {
        self.roots.iter().map(|&r| self.leaves_under(r)).collect()
    }

    /// Checks the structural invariants against the map it was built from.
    pub fn validate(&self, map: &TopologicalMap) -> Result<(), MemoryError> {
        let bad = |m: String| Err(MemoryError::Invalid(m));
        let n = map.len();
        let mut parent_count = vec![0usize; self.nodes.len()];
        let mut leaf_seen = vec![false; n];
        for (k, node) in self.nodes.iter().enumerate() {
            if node.id as usize != k {
                return bad(format!("forest node at index {k} has id {}", node.id));
            }
            match node.leaf_ref {
                Some(r) => {
                    if !node.children.is_empty() {
                        return bad(format!("leaf {k} has children"));
                    }
                    if r as usize >= n || leaf_seen[r as usize] {
                        return bad(format!("leaf {k} references node {r} invalidly"));
                    }
                    leaf_seen[r as usize] = true;
                }
                None => {
                    if node.children.len() < 2 {
                        return bad(format!("internal node {k} has fewer than two children"));
                    }
                    for &c in &node.children {
                        if c as usize >= k {
                            return bad(format!("node {k} has child {c} with a larger id"));
                        }
                        parent_count[c as usize] += 1;
                    }
                }
            }
        }
        if leaf_seen.iter().any(|s| !s) {
            return bad("not every map node has a leaf".into());
        }
        for &r in &self.roots {
            if r as usize >= self.nodes.len() {
                return bad(format!("root {r} does not exist"));
            }
            parent_count[r as usize] += 1;
        }
        if let Some(k) = parent_count.iter().position(|&c| c != 1) {
            return bad(format!("forest node {k} is reachable from {} places", parent_count[k]));
        }
        Ok(())
    }
}

struct Merge {
    a: usize,
    b: usize,
    similarity: f64,
}

/// Index into a condensed upper-triangular matrix of `n` items.
#[inline]
fn tri(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Greedy average-linkage agglomeration. Each round merges the most similar
/// pair of active clusters, ties going to the lexicographically smallest
/// pair of cluster ids; merging stops once the best similarity drops below
/// `threshold`. Returns the merges in order and the surviving cluster ids.
fn agglomerate(sim: &mut [f64], n: usize, threshold: f64) -> (Vec<Merge>, Vec<usize>) {
    // Slot s holds cluster `ids[s]`; a merge reuses the lower slot.
    let mut ids: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut best: Vec<(usize, f64)> = vec![(usize::MAX, f64::NEG_INFINITY); n];
    let row_best = |s: usize, sim: &[f64], active: &[bool], ids: &[usize]| {
        let mut b = (usize::MAX, f64::NEG_INFINITY);
        for t in 0..n {
            if t == s || !active[t] {
                continue;
            }
            let v = sim[tri(n, s, t)];
            if v > b.1 || (v == b.1 && (b.0 == usize::MAX || ids[t] < ids[b.0])) {
                b = (t, v);
            }
        }
        b
    };
    for s in 0..n {
        best[s] = row_best(s, sim, &active, &ids);
    }
    let mut merges = Vec::new();
    let mut live = n;
    while live > 1 {
        // Global best pair under (similarity desc, (lo id, hi id) asc).
        let mut pick: Option<(usize, usize, f64, (usize, usize))> = None;
        for s in 0..n {
            if !active[s] || best[s].0 == usize::MAX {
                continue;
            }
            let (t, v) = best[s];
            let key = (ids[s].min(ids[t]), ids[s].max(ids[t]));
            let better = match pick {
                None => true,
                Some((_, _, pv, pk)) => v > pv || (v == pv && key < pk),
            };
            if better {
                pick = Some((s, t, v, key));
            }
        }
        let Some((s, t, v, _)) = pick else { break };
        if v < threshold {
            break;
        }
        let (keep, drop) = (s.min(t), s.max(t));
        merges.push(Merge {
            a: ids[s].min(ids[t]),
            b: ids[s].max(ids[t]),
            similarity: v,
        });
        let (na, nb) = (size[keep] as f64, size[drop] as f64);
        for x in 0..n {
            if !active[x] || x == keep || x == drop {
                continue;
            }
            let k = tri(n, keep, x);
            sim[k] = (na * sim[k] + nb * sim[tri(n, drop, x)]) / (na + nb);
        }
        active[drop] = false;
        size[keep] += size[drop];
        ids[keep] = n + merges.len() - 1;
        live -= 1;
        for x in 0..n {
            if !active[x] {
                continue;
            }
            if x == keep || best[x].0 == keep || best[x].0 == drop {
                best[x] = row_best(x, sim, &active, &ids);
            } else {
                let v = sim[tri(n, keep, x)];
                let (bt, bv) = best[x];
                if v > bv || (v == bv && ids[keep] < ids[bt]) {
                    best[x] = (keep, v);
                }
            }
        }
    }
    let mut survivors: Vec<usize> = (0..n).filter(|&s| active[s]).map(|s| ids[s]).collect();
    survivors.sort_unstable();
    (merges, survivors)
}

/// First content word of a node description, used as its leaf label.
pub fn leaf_label(description: &str) -> String {
    content_words(description)
        .into_iter()
        .next()
        .unwrap_or_else(|| "node".to_string())
}

/// Builds the semantic forest over all map nodes.
pub fn build_forest(
    map: &TopologicalMap,
    params: &MemoryParams,
    summarizer: &dyn Summarizer,
) -> Result<SemanticForest, MemoryError> {
    params.validate()?;
    let n = map.len();
    if n == 0 {
        return Err(MemoryError::EmptyMap);
    }
    let fused: Vec<Vec<f64>> = map
        .nodes
        .iter()
        .map(|node| fuse_features(node, params))
        .collect::<Result<_, _>>()?;

    let mut sim = vec![0.0; n * (n - 1) / 2];
    for i in 0..n {
        for j in i + 1..n {
            sim[tri(n, i, j)] = pairwise_similarity(&map.nodes[i], &map.nodes[j], params);
        }
    }
    let (merges, survivors) = agglomerate(&mut sim, n, params.tau);
    drop(sim);

    // Regroup: each kept merge takes as children the pieces obtained by
    // repeatedly splitting its largest internal piece until `max_children`
    // pieces exist or only leaves remain.
    let children_of = |c: usize| -> [usize; 2] {
        let m = &merges[c - n];
        [m.a, m.b]
    };
    let mut size = vec![1usize; n + merges.len()];
    for (k, m) in merges.iter().enumerate() {
        size[n + k] = size[m.a] + size[m.b];
    }
    // Largest piece first, then the loosest merge, then the later merge.
    let split_key = |c: usize| (std::cmp::Reverse(size[c]), merges[c - n].similarity, std::cmp::Reverse(c));
    let mut kept = vec![false; merges.len()];
    let mut expanded: Vec<Vec<usize>> = vec![Vec::new(); merges.len()];
    let mut stack: Vec<usize> = survivors.iter().copied().filter(|&c| c >= n).collect();
    while let Some(c) = stack.pop() {
        kept[c - n] = true;
        let mut pieces: Vec<usize> = children_of(c).to_vec();
        while pieces.len() < params.max_children {
            let Some(k) = (0..pieces.len())
                .filter(|&k| pieces[k] >= n)
                .min_by(|&x, &y| {
                    let (zx, sx, ix) = split_key(pieces[x]);
                    let (zy, sy, iy) = split_key(pieces[y]);
                    zx.cmp(&zy).then(sx.total_cmp(&sy)).then(ix.cmp(&iy))
                })
            else {
                break;
            };
            let split = pieces.swap_remove(k);
            pieces.extend(children_of(split));
        }
        stack.extend(pieces.iter().copied().filter(|&p| p >= n));
        expanded[c - n] = pieces;
    }

    // Renumber: leaves keep 0..n, kept internal nodes follow in merge order.
    let mut new_id = vec![u32::MAX; n + merges.len()];
    for (k, slot) in new_id.iter_mut().enumerate().take(n) {
        *slot = k as u32;
    }
    let mut next = n as u32;
    for k in 0..merges.len() {
        if kept[k] {
            new_id[n + k] = next;
            next += 1;
        }
    }

    let mut nodes: Vec<ForestNode> = Vec::with_capacity(next as usize);
    let mut sums: Vec<Vec<f64>> = Vec::with_capacity(next as usize);
    for (k, node) in map.nodes.iter().enumerate() {
        nodes.push(ForestNode {
            id: k as u32,
            children: Vec::new(),
            leaf_ref: Some(node.id),
            centroid_feature: fused[k].clone(),
            summary: node.description.clone(),
            label: leaf_label(&node.description),
            merge_similarity: None,
            leaf_count: 1,
        });
        sums.push(fused[k].clone());
    }
    for k in 0..merges.len() {
        if !kept[k] {
            continue;
        }
        let mut children: Vec<u32> = expanded[k].iter().map(|&c| new_id[c]).collect();
        children.sort_unstable();
        let mut sum = vec![0.0; fused[0].len()];
        let mut count = 0;
        for &c in &children {
            for (s, x) in sum.iter_mut().zip(&sums[c as usize]) {
                *s += x;
            }
            count += nodes[c as usize].leaf_count;
        }
        let mut centroid = sum.clone();
        normalize(&mut centroid);
        let child_refs: Vec<&ForestNode> = children.iter().map(|&c| &nodes[c as usize]).collect();
        let summary = summarize_cluster(&child_refs, summarizer);
        nodes.push(ForestNode {
            id: nodes.len() as u32,
            children,
            leaf_ref: None,
            centroid_feature: centroid,
            summary: summary.summary,
            label: summary.label,
            merge_similarity: Some(merges[k].similarity),
            leaf_count: count,
        });
        sums.push(sum);
    }
    let mut roots: Vec<u32> = survivors.iter().map(|&c| new_id[c]).collect();
    roots.sort_unstable();
    Ok(SemanticForest { roots, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Position;
    use crate::memory::summarize::MajoritySummarizer;
    use crate::memory::TopoNode;
    use crate::retrieval::{Embedder, HashEmbedder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn map_from(points: &[(f64, f64, &str)]) -> TopologicalMap {
        let emb = HashEmbedder::new(64);
        let nodes = points
            .iter()
            .enumerate()
            .map(|(k, &(x, y, text))| TopoNode {
                id: k as u32,
                position: Position::planar(x, y),
                description: text.to_string(),
                embedding: emb.embed(text).unwrap(),
                spatial_feature: vec![x / 100.0, y / 100.0, 1.0],
                object_ids: vec![],
            })
            .collect::<Vec<_>>();
        let edges = crate::memory::topology::connect(&nodes, 2.0);
        TopologicalMap { nodes, edges }
    }

    fn params(omega: f64, tau: f64, max_children: usize) -> MemoryParams {
        MemoryParams {
            omega,
            tau,
            max_children,
            embedding_dim: 64,
            ..Default::default()
        }
    }

    /// Reference agglomeration: recompute every cluster-pair average from
    /// the leaf similarity matrix each round.
    fn oracle_partition(map: &TopologicalMap, p: &MemoryParams) -> BTreeSet<BTreeSet<u32>> {
        let n = map.len();
        let s: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| pairwise_similarity(&map.nodes[i], &map.nodes[j], p))
                    .collect()
            })
            .collect();
        let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
        let mut next_id = n;
        loop {
            let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
            for a in 0..clusters.len() {
                for b in a + 1..clusters.len() {
                    let (ca, cb) = (&clusters[a], &clusters[b]);
                    let total: f64 = ca.1.iter().flat_map(|&i| cb.1.iter().map(move |&j| (i, j))).map(|(i, j)| s[i][j]).sum();
                    let avg = total / (ca.1.len() * cb.1.len()) as f64;
                    let key = (ca.0.min(cb.0), ca.0.max(cb.0));
                    let better = match best {
                        None => true,
                        Some((v, k, _, _)) => avg > v + 1e-12 || ((avg - v).abs() <= 1e-12 && key < k),
                    };
                    if better {
                        best = Some((avg, key, a, b));
                    }
                }
            }
            match best {
                Some((v, _, a, b)) if v >= p.tau => {
                    let cb = clusters.remove(b);
                    let ca = clusters.remove(a);
                    let mut members = ca.1;
                    members.extend(cb.1);
                    clusters.push((next_id, members));
                    next_id += 1;
                }
                _ => break,
            }
        }
        clusters
            .into_iter()
            .map(|(_, m)| m.into_iter().map(|i| i as u32).collect())
            .collect()
    }

    fn partition(f: &SemanticForest) -> BTreeSet<BTreeSet<u32>> {
        f.root_partition()
            .into_iter()
            .map(|v| v.into_iter().collect())
            .collect()
    }

    #[test]
    fn single_node_forest() {
        let map = map_from(&[(0.0, 0.0, "sofa")]);
        let f = build_forest(&map, &params(0.5, 0.6, 8), &MajoritySummarizer).unwrap();
        assert_eq!(f.roots, vec![0]);
        assert_eq!(f.nodes.len(), 1);
        assert_eq!(f.nodes[0].leaf_ref, Some(0));
        f.validate(&map).unwrap();
    }

    #[test]
    fn identical_nodes_merge_under_one_root() {
        let map = map_from(&[(1.0, 1.0, "sofa"), (1.0, 1.0, "sofa")]);
        let f = build_forest(&map, &params(0.5, 0.5, 8), &MajoritySummarizer).unwrap();
        assert_eq!(f.roots.len(), 1);
        assert_eq!(f.node(f.roots[0]).children, vec![0, 1]);
        assert_eq!(f.node(f.roots[0]).label, "sofa");
        f.validate(&map).unwrap();
    }

    fn three_clusters(rng: &mut ChaCha8Rng) -> TopologicalMap {
        let centers = [(0.0, 0.0), (60.0, 0.0), (0.0, 60.0)];
        let pts: Vec<(f64, f64, &str)> = (0..12)
            .map(|k| {
                let (cx, cy) = centers[k % 3];
                (cx + rng.gen_range(-1.0..1.0), cy + rng.gen_range(-1.0..1.0), "item")
            })
            .collect();
        map_from(&pts)
    }

    #[test]
    fn separated_clusters_become_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let map = three_clusters(&mut rng);
            // Intra-cluster distance < 2.9 m gives similarity > exp(-1.45) ≈ 0.23;
            // inter-cluster similarity is below exp(-29).
            let p = params(1.0, 0.1, 8);
            let f = build_forest(&map, &p, &MajoritySummarizer).unwrap();
            f.validate(&map).unwrap();
            assert_eq!(f.roots.len(), 3);
            let expected: BTreeSet<BTreeSet<u32>> = (0..3)
                .map(|c| (0..12).filter(|k| k % 3 == c).map(|k| k as u32).collect())
                .collect();
            assert_eq!(partition(&f), expected);
            assert_eq!(partition(&f), oracle_partition(&map, &p));
        }
    }

    #[test]
    fn random_maps_match_reference_agglomeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let words = ["sofa", "chair", "lamp", "desk", "grey sofa", "wooden chair"];
        for _ in 0..20 {
            let n = rng.gen_range(2..25);
            let pts: Vec<_> = (0..n)
                .map(|_| {
                    (
                        rng.gen_range(0.0..8.0),
                        rng.gen_range(0.0..8.0),
                        words[rng.gen_range(0..words.len())],
                    )
                })
                .collect();
            let map = map_from(&pts);
            let p = params(rng.gen_range(0.0..1.0), rng.gen_range(0.3..0.9), rng.gen_range(2..6));
            let f = build_forest(&map, &p, &MajoritySummarizer).unwrap();
            f.validate(&map).unwrap();
            assert!(f.nodes.iter().all(|x| x.children.len() <= p.max_children));
            assert_eq!(partition(&f), oracle_partition(&map, &p));
        }
    }

    #[test]
    fn centroids_are_renormalized_leaf_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let map = three_clusters(&mut rng);
        let p = params(0.7, 0.2, 3);
        let f = build_forest(&map, &p, &MajoritySummarizer).unwrap();
        for node in f.nodes.iter().filter(|n| !n.is_leaf()) {
            let leaves = f.leaves_under(node.id);
            assert_eq!(leaves.len(), node.leaf_count);
            let mut mean = vec![0.0; node.centroid_feature.len()];
            for &l in &leaves {
                let fz = fuse_features(&map.nodes[l as usize], &p).unwrap();
                for (m, x) in mean.iter_mut().zip(fz) {
                    *m += x / leaves.len() as f64;
                }
            }
            normalize(&mut mean);
            for (a, b) in mean.iter().zip(&node.centroid_feature) {
                assert!((a - b).abs() < 1e-6);
            }
            // Sibling leaf sets are disjoint and cover the parent.
            let mut union = Vec::new();
            for &c in &node.children {
                union.extend(f.leaves_under(c));
            }
            union.sort_unstable();
            assert_eq!(union, leaves);
        }
    }

    #[test]
    fn regrouping_flattens_without_changing_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let map = three_clusters(&mut rng);
        let binary = build_forest(&map, &params(1.0, 0.1, 2), &MajoritySummarizer).unwrap();
        let flat = build_forest(&map, &params(1.0, 0.1, 100), &MajoritySummarizer).unwrap();
        flat.validate(&map).unwrap();
        assert_eq!(partition(&binary), partition(&flat));
        assert!(binary.nodes.iter().all(|n| n.is_leaf() || n.children.len() == 2));
        // A fan-out above the cluster size leaves one level per root.
        assert_eq!(flat.depth(), 2);
        assert_eq!(flat.max_branching(), 4);
    }

    #[test]
    fn build_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let map = three_clusters(&mut rng);
        let p = params(0.5, 0.3, 4);
        let a = build_forest(&map, &p, &MajoritySummarizer).unwrap();
        let b = build_forest(&map, &p, &MajoritySummarizer).unwrap();
        assert_eq!(a, b);
    }
}
