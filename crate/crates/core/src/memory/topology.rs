use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{MemoryError, MemoryParams};
use crate::env_sim::ObservationRecord;
use crate::geometry::Position;
use crate::retrieval::Embedder;
use crate::NodeId;

/// A key pose with its spatial fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopoNode {
    pub id: NodeId,
    pub position: Position,
    pub description: String,
    /// Unit-norm embedding of `description`.
    pub embedding: Vec<f64>,
    /// Position normalized into the map's bounding box, with a trailing
    /// homogeneous 1 so it is never the zero vector.
    pub spatial_feature: Vec<f64>,
    pub object_ids: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub i: NodeId,
    pub j: NodeId,
    /// Euclidean distance between the endpoints, in meters.
    pub weight: f64,
}

/// Undirected graph of key poses. Node ids are `0..nodes.len()` and equal
/// each node's index; edges are stored once with `i < j`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TopologicalMap {
    pub nodes: Vec<TopoNode>,
    pub edges: Vec<Edge>,
}

impl TopologicalMap {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&TopoNode> {
        self.nodes.get(id as usize)
    }

    /// Adjacency lists sorted by neighbor id.
    pub fn adjacency(&self) -> Vec<Vec<(NodeId, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.i as usize].push((e.j, e.weight));
            adj[e.j as usize].push((e.i, e.weight));
        }
        for list in &mut adj {
            list.sort_by_key(|&(n, _)| n);
        }
        adj
    }

    /// Weight of the edge between `a` and `b`, if any.
    pub fn edge_weight(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&(i, j)))
            .ok()
            .map(|k| self.edges[k].weight)
    }

    /// Copy of the map with every edge removed.
    pub fn without_edges(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
            edges: Vec::new(),
        }
    }

    /// Checks ids, edge ordering, weights and the distance threshold.
    pub fn validate(&self, params: &MemoryParams) -> Result<(), MemoryError> {
        for (k, n) in self.nodes.iter().enumerate() {
            if n.id as usize != k {
                return Err(MemoryError::Invalid(format!("node at index {k} has id {}", n.id)));
            }
            let norm = n.embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(MemoryError::Invalid(format!("node {k} embedding is not unit norm")));
            }
            if n.embedding.len() != params.embedding_dim {
                return Err(MemoryError::Invalid(format!(
                    "node {k} embedding has dimension {}, expected {}",
                    n.embedding.len(),
                    params.embedding_dim
                )));
            }
        }
        for w in self.edges.windows(2) {
            if (w[0].i, w[0].j) >= (w[1].i, w[1].j) {
                return Err(MemoryError::Invalid("edges are not sorted and unique".into()));
            }
        }
        for e in &self.edges {
            if e.i >= e.j || e.j as usize >= self.nodes.len() {
                return Err(MemoryError::Invalid(format!("bad edge ({}, {})", e.i, e.j)));
            }
            let d = self.nodes[e.i as usize]
                .position
                .distance(&self.nodes[e.j as usize].position);
            if (d - e.weight).abs() > 1e-9 || e.weight >= params.delta_spatial {
                return Err(MemoryError::Invalid(format!(
                    "edge ({}, {}) weight {} does not match distance {d}",
                    e.i, e.j, e.weight
                )));
            }
        }
        Ok(())
    }
}

/// Produces a node's textual fingerprint from the observations merged into
/// it.
pub trait Describer {
    fn describe(&self, records: &[&ObservationRecord]) -> String;
}

/// Uses the observation tokens themselves: distinct tokens in stream order,
/// joined by " | ".
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenDescriber;

impl Describer for TokenDescriber {
    fn describe(&self, records: &[&ObservationRecord]) -> String {
        let mut parts: Vec<&str> = Vec::new();
        for r in records {
            if !parts.contains(&r.obs_token.as_str()) {
                parts.push(&r.obs_token);
            }
        }
        parts.join(" | ")
    }
}

/// Uniform hash grid over the plane for radius queries.
struct PointIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl PointIndex {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, p: &Position) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: &Position, idx: usize) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(idx);
    }

    /// Indices in the 3×3 block of buckets around `p`; a superset of the
    /// points within `cell` of `p`.
    fn around(&self, p: &Position) -> impl Iterator<Item = usize> + '_ {
        let (kx, ky) = self.key(p);
        (-1..=1)
            .flat_map(move |dx| (-1..=1).map(move |dy| (kx + dx, ky + dy)))
            .filter_map(|k| self.buckets.get(&k))
            .flatten()
            .copied()
    }
}

/// Builds the topological map from an observation stream.
///
/// Poses within `dedup_radius` of an existing key position are merged into
/// it (the nearest one, ties to the lower id). Every pair of key positions
/// closer than `delta_spatial` is joined by an edge weighted with their
/// Euclidean distance.
pub fn build_topology(
    stream: &[ObservationRecord],
    params: &MemoryParams,
    describer: &dyn Describer,
    embedder: &dyn Embedder,
) -> Result<TopologicalMap, MemoryError> {
    params.validate()?;
    if stream.is_empty() {
        return Err(MemoryError::EmptyStream);
    }
    if embedder.dim() != params.embedding_dim {
        return Err(MemoryError::Invalid(format!(
            "embedder dimension {} does not match embedding_dim {}",
            embedder.dim(),
            params.embedding_dim
        )));
    }

    let mut keys: Vec<Position> = Vec::new();
    let mut members: Vec<Vec<&ObservationRecord>> = Vec::new();
    let mut index = PointIndex::new(params.dedup_radius.max(1e-6));
    for rec in stream {
        let p = Position::planar(rec.pose.x, rec.pose.y);
        let mut best: Option<(usize, f64)> = None;
        for k in index.around(&p) {
            let d = keys[k].distance(&p);
            if d < params.dedup_radius
                && best.map_or(true, |(bk, bd)| d < bd || (d == bd && k < bk))
            {
                best = Some((k, d));
            }
        }
        match best {
            Some((k, _)) => members[k].push(rec),
            None => {
                index.insert(&p, keys.len());
                keys.push(p);
                members.push(vec![rec]);
            }
        }
    }

    let descriptions: Vec<String> = members.iter().map(|m| describer.describe(m)).collect();
    let texts: Vec<&str> = descriptions.iter().map(String::as_str).collect();
    let embeddings = embedder.embed_batch(&texts)?;
    let spatial = spatial_features(&keys);

    let nodes: Vec<TopoNode> = keys
        .iter()
        .zip(members)
        .zip(descriptions)
        .zip(embeddings)
        .zip(spatial)
        .enumerate()
        .map(|(id, ((((pos, recs), description), embedding), spatial_feature))| {
            let mut object_ids: Vec<u32> = recs
                .iter()
                .flat_map(|r| r.visible_object_ids.iter().copied())
                .collect();
            object_ids.sort_unstable();
            object_ids.dedup();
            TopoNode {
                id: id as NodeId,
                position: *pos,
                description,
                embedding,
                spatial_feature,
                object_ids,
            }
        })
        .collect();

    let edges = connect(&nodes, params.delta_spatial);
    Ok(TopologicalMap { nodes, edges })
}

/// Builds a map with one node per given place, skipping pose
/// deduplication. Node `k` gets id `k`; `object_ids` stay empty.
pub fn map_from_places(
    places: &[(Position, String)],
    params: &MemoryParams,
    embedder: &dyn Embedder,
) -> Result<TopologicalMap, MemoryError> {
    params.validate()?;
    if places.is_empty() {
        return Err(MemoryError::EmptyMap);
    }
    if embedder.dim() != params.embedding_dim {
        return Err(MemoryError::Invalid(format!(
            "embedder dimension {} does not match embedding_dim {}",
            embedder.dim(),
            params.embedding_dim
        )));
    }
    let texts: Vec<&str> = places.iter().map(|(_, t)| t.as_str()).collect();
    let embeddings = embedder.embed_batch(&texts)?;
    let keys: Vec<Position> = places.iter().map(|(p, _)| *p).collect();
    let nodes: Vec<TopoNode> = places
        .iter()
        .zip(embeddings)
        .zip(spatial_features(&keys))
        .enumerate()
        .map(|(id, (((pos, text), embedding), spatial_feature))| TopoNode {
            id: id as NodeId,
            position: *pos,
            description: text.clone(),
            embedding,
            spatial_feature,
            object_ids: Vec::new(),
        })
        .collect();
    let edges = connect(&nodes, params.delta_spatial);
    Ok(TopologicalMap { nodes, edges })
}

/// All pairs closer than `delta`, sorted by `(i, j)`.
pub(crate) fn connect(nodes: &[TopoNode], delta: f64) -> Vec<Edge> {
    let mut index = PointIndex::new(delta);
    for (k, n) in nodes.iter().enumerate() {
        index.insert(&n.position, k);
    }
    let mut edges = Vec::new();
    for (i, a) in nodes.iter().enumerate() {
        for j in index.around(&a.position) {
            if j <= i {
                continue;
            }
            let d = a.position.distance(&nodes[j].position);
            if d < delta {
                edges.push(Edge {
                    i: i as NodeId,
                    j: j as NodeId,
                    weight: d,
                });
            }
        }
    }
    edges.sort_by_key(|e| (e.i, e.j));
    edges
}

/// Positions scaled into the bounding box (centered, longest side 1) plus a
/// homogeneous coordinate.
fn spatial_features(keys: &[Position]) -> Vec<Vec<f64>> {
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in keys {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let extent = (max_x - min_x).max(max_y - min_y).max(1e-9);
    let (cx, cy) = (0.5 * (min_x + max_x), 0.5 * (min_y + max_y));
    keys.iter()
        .map(|p| vec![(p.x - cx) / extent, (p.y - cy) / extent, 1.0])
        .collect()
}
