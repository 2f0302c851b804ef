use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::grid::{Cell, OccupancyGrid};
use crate::geometry::Point2;

/// Clusters smaller than this are treated as sensing noise.
pub const DEFAULT_MIN_FRONTIER_SIZE: usize = 2;

/// A four-connected group of frontier cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierCluster {
    pub cells: Vec<Cell>,
    pub centroid: Point2,
}

/// Finds frontier cells (explored, with an unknown four-neighbor) and groups
/// them into four-connected components by breadth-first search. Components
/// with fewer than `min_size` cells are dropped.
///
/// Clusters are ordered by their first cell in row-major order, and the
/// cells of each cluster are sorted row-major; a cluster's index in the
/// returned list is its id.
pub fn detect_frontiers(grid: &OccupancyGrid, min_size: usize) -> Vec<FrontierCluster> {
    let cols = grid.cols();
    let mut assigned = vec![false; cols * grid.rows()];
    let mut clusters = Vec::new();
    for r in 0..grid.rows() {
        for c in 0..cols {
            if assigned[r * cols + c] || !grid.is_frontier((c, r)) {
                continue;
            }
            assigned[r * cols + c] = true;
            let mut cells = vec![(c, r)];
            let mut queue = VecDeque::from([(c, r)]);
            while let Some(cell) = queue.pop_front() {
                for n in grid.neighbors4(cell) {
                    let i = n.1 * cols + n.0;
                    if !assigned[i] && grid.is_frontier(n) {
                        assigned[i] = true;
                        cells.push(n);
                        queue.push_back(n);
                    }
                }
            }
            if cells.len() < min_size {
                continue;
            }
            cells.sort_by_key(|&(c, r)| (r, c));
            let n = cells.len() as f64;
            let (sx, sy) = cells.iter().fold((0.0, 0.0), |(sx, sy), &cell| {
                let p = grid.center(cell);
                (sx + p.x, sy + p.y)
            });
            clusters.push(FrontierCluster {
                cells,
                centroid: Point2::new(sx / n, sy / n),
            });
        }
    }
    clusters
}

/// Index of the frontier whose centroid is closest to `current`, ties going
/// to the smallest index. `None` means there is nothing left to explore.
pub fn select_frontier_index(frontiers: &[FrontierCluster], current: Point2) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, f) in frontiers.iter().enumerate() {
        let d = f.centroid.distance(&current);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Greedy nearest-frontier rule: the centroid closest to `current`.
pub fn select_next_frontier(frontiers: &[FrontierCluster], current: Point2) -> Option<Point2> {
    select_frontier_index(frontiers, current).map(|i| frontiers[i].centroid)
}
