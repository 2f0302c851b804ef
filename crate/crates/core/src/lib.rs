//! Spatial-semantic environment memory for multi-goal navigation.
//!
//! The crate covers the full pipeline:
//!
//! - [`env_sim`]: synthetic scenes and frontier exploration producing an
//!   observation stream.
//! - [`memory`]: a topological map of pose nodes plus a semantic forest built
//!   by agglomerative clustering.
//! - [`retrieval`]: flat and forest-pruned search, anchor-guided conditional
//!   retrieval and neighbor boosting.
//! - [`instruction`]: a small grammar for multi-goal instructions and the
//!   retrieval scheduler.
//! - [`planner`]: shortest-path cost matrices and the constrained visiting
//!   order solver.
//! - [`bench`]: seeded benchmark suites, ablations and result export.

pub mod bench;
pub mod env_sim;
pub mod geometry;
pub mod instruction;
pub mod memory;
pub mod planner;
pub mod retrieval;
pub mod service;
pub mod vocab;

pub use geometry::{Point2, Position, Rect};

/// Identifier of a topological map node.
pub type NodeId = u32;
