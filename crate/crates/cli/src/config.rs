use std::path::Path;

use navmem::bench::BenchParams;
use navmem::env_sim::{ExploreParams, SceneConfig};
use navmem::memory::MemoryParams;
use navmem::retrieval::{AnchorScore, CandidateSource, Query, SearchMode};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Stage};

/// Retrieval settings shared by every query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryParams {
    pub k: usize,
    pub hops: usize,
    pub sigma: f64,
    pub eta: f64,
    pub beam_width: usize,
    pub mode: SearchMode,
    pub anchor_threshold: f64,
    pub context_threshold: f64,
    pub candidate_source: CandidateSource,
    pub anchor_score: AnchorScore,
}

impl Default for QueryParams {
    fn default() -> Self {
        let q = Query::default();
        Self {
            k: q.k,
            hops: q.hops,
            sigma: q.sigma,
            eta: q.eta,
            beam_width: q.beam_width,
            mode: q.mode,
            anchor_threshold: q.anchor_threshold,
            context_threshold: q.context_threshold,
            candidate_source: q.candidate_source,
            anchor_score: q.anchor_score,
        }
    }
}

impl QueryParams {
    pub fn template(&self) -> Query {
        Query {
            k: self.k,
            hops: self.hops,
            sigma: self.sigma,
            eta: self.eta,
            beam_width: self.beam_width,
            mode: self.mode,
            anchor_threshold: self.anchor_threshold,
            context_threshold: self.context_threshold,
            candidate_source: self.candidate_source,
            anchor_score: self.anchor_score,
            ..Query::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    pub lambda: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self { lambda: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub suite: BenchParams,
    pub repeats: usize,
    /// Memory parameters for bench cases; derived from the lattice when
    /// absent.
    pub memory: Option<MemoryParams>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            suite: BenchParams::default(),
            repeats: 5,
            memory: None,
        }
    }
}

/// Everything a run can be configured with. Flags override these values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub verbosity: u8,
    pub scene: SceneConfig,
    pub explore: ExploreParams,
    pub memory: MemoryParams,
    pub query: QueryParams,
    pub planner: PlannerParams,
    pub bench: BenchSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(Stage::Config, path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(Stage::Config, path.display(), e))
    }
}
