//! Dual memory: a topological map of key poses and a semantic forest
//! clustered over it.

pub mod forest;
pub mod persist;
pub mod similarity;
pub mod summarize;
pub mod topology;

use serde::{Deserialize, Serialize};

pub use forest::{build_forest, ForestId, ForestNode, SemanticForest};
pub use persist::{load_memory, save_memory, SCHEMA_VERSION};
pub use similarity::{fuse_features, pairwise_similarity, spatial_affinity};
pub use summarize::{summarize_cluster, ClusterSummary, MajoritySummarizer, RemoteSummarizer, Summarizer};
pub use topology::{build_topology, map_from_places, Describer, Edge, TokenDescriber, TopoNode, TopologicalMap};

use crate::env_sim::ObservationRecord;
use crate::retrieval::embed::EmbedError;
use crate::retrieval::Embedder;
use crate::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum MemoryError {
    #[error("observation stream is empty; nothing to map")]
    EmptyStream,
    #[error("map has no nodes")]
    EmptyMap,
    #[error("zero-length feature vector at node {0}")]
    ZeroVector(NodeId),
    #[error("invalid memory: {0}")]
    Invalid(String),
    #[error("unsupported memory schema version {0}")]
    UnsupportedVersion(u64),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryParams {
    /// Edge cutoff and spatial length scale, meters.
    pub delta_spatial: f64,
    /// Weight of spatial proximity against semantic agreement.
    pub omega: f64,
    /// Weight of the spatial feature in fused features.
    pub alpha: f64,
    /// Clustering stops once the best pair similarity falls below this.
    pub tau: f64,
    pub embedding_dim: usize,
    /// Poses closer than this to an existing key pose are merged into it.
    pub dedup_radius: f64,
    /// Fan-out the binary merge tree is regrouped into.
    pub max_children: usize,
}

impl Default for MemoryParams {
    fn default() -> Self {
        Self {
            delta_spatial: 2.0,
            omega: 0.5,
            alpha: 0.5,
            tau: 0.6,
            embedding_dim: crate::retrieval::embed::DEFAULT_EMBEDDING_DIM,
            dedup_radius: 0.5,
            max_children: 8,
        }
    }
}

impl MemoryParams {
    pub fn validate(&self) -> Result<(), MemoryError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let fail = |m: &str| Err(MemoryError::Invalid(m.to_string()));
        if !(self.delta_spatial > 0.0 && self.delta_spatial.is_finite()) {
            return fail("delta_spatial must be positive");
        }
        if !unit(self.omega) {
            return fail("omega must lie in [0, 1]");
        }
        if !unit(self.alpha) {
            return fail("alpha must lie in [0, 1]");
        }
        if !unit(self.tau) {
            return fail("tau must lie in [0, 1]");
        }
        if self.embedding_dim == 0 {
            return fail("embedding_dim must be at least 1");
        }
        if !(self.dedup_radius >= 0.0 && self.dedup_radius.is_finite()) {
            return fail("dedup_radius must be non-negative");
        }
        if self.max_children < 2 {
            return fail("max_children must be at least 2");
        }
        Ok(())
    }
}

/// A frozen memory: map, forest and the parameters they were built with.
#[derive(Debug, Clone, PartialEq)]
pub struct Memory {
    pub params: MemoryParams,
    pub map: TopologicalMap,
    pub forest: SemanticForest,
    adjacency: Vec<Vec<(NodeId, f64)>>,
}

impl Memory {
    pub fn new(params: MemoryParams, map: TopologicalMap, forest: SemanticForest) -> Self {
        let adjacency = map.adjacency();
        Self {
            params,
            map,
            forest,
            adjacency,
        }
    }

    /// Neighbors of `id` with edge weights, ascending by id.
    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, f64)] {
        &self.adjacency[id as usize]
    }

    pub fn adjacency(&self) -> &[Vec<(NodeId, f64)>] {
        &self.adjacency
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &TopoNode {
        &self.map.nodes[id as usize]
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        self.params.validate()?;
        self.map.validate(&self.params)?;
        self.forest.validate(&self.map)
    }
}

/// Builds map and forest from an observation stream.
pub fn build_memory(
    stream: &[ObservationRecord],
    params: &MemoryParams,
    describer: &dyn Describer,
    embedder: &dyn Embedder,
    summarizer: &dyn Summarizer,
) -> Result<Memory, MemoryError> {
    let map = build_topology(stream, params, describer, embedder)?;
    let forest = build_forest(&map, params, summarizer)?;
    Ok(Memory::new(params.clone(), map, forest))
}

/// Builds map and forest with one node per place.
pub fn build_memory_from_places(
    places: &[(crate::Position, String)],
    params: &MemoryParams,
    embedder: &dyn Embedder,
    summarizer: &dyn Summarizer,
) -> Result<Memory, MemoryError> {
    let map = map_from_places(places, params, embedder)?;
    let forest = build_forest(&map, params, summarizer)?;
    Ok(Memory::new(params.clone(), map, forest))
}
