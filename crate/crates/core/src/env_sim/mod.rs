//! Synthetic scenes and frontier-based exploration.
//!
//! The simulator works on a 2D occupancy grid. A disc sensor with
//! line-of-sight occlusion reveals cells, frontier clusters are found by
//! BFS over explored cells that border unknown space, and the agent moves
//! greedily toward the nearest frontier centroid. Every step emits an
//! [`ObservationRecord`] that the memory builder consumes.

mod explore;
mod frontier;
mod grid;
mod scene;

pub use explore::{
    explore, explore_detailed, observation_token, read_stream, write_stream, Exploration,
    ExploreParams, Explorer, ObservationRecord, Pose, Termination,
};
pub use frontier::{
    detect_frontiers, select_frontier_index, select_next_frontier, FrontierCluster,
    DEFAULT_MIN_FRONTIER_SIZE,
};
pub use grid::{Cell, CellState, OccupancyGrid};
pub use scene::{generate_scene, BlockedMask, SceneConfig, SceneDescription, SceneObject};

use crate::geometry::Point2;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scene configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("placed {placed} of {requested} objects before running out of free space")]
    PlacementFailed { placed: usize, requested: usize },
    #[error("start ({}, {}) is not in free space", .0.x, .0.y)]
    InvalidStart(Point2),
    #[error("invalid observation stream: {0}")]
    InvalidStream(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
