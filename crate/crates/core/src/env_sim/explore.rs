use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::frontier::{detect_frontiers, select_frontier_index, DEFAULT_MIN_FRONTIER_SIZE};
use super::grid::{Cell, CellState, OccupancyGrid};
use super::scene::{BlockedMask, SceneDescription};
use super::SimError;
use crate::geometry::Point2;

/// Agent pose: planar position and heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// One timestamped exploration sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationRecord {
    pub t: u64,
    pub pose: Pose,
    pub obs_token: String,
    pub visible_object_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreParams {
    pub resolution: f64,
    /// Radius of the omnidirectional sensor, in meters.
    pub sensor_range: f64,
    pub step_budget: usize,
    /// Grid cells travelled between consecutive observations.
    pub cells_per_step: usize,
    pub min_frontier_size: usize,
}

impl Default for ExploreParams {
    fn default() -> Self {
        Self {
            resolution: 1.0,
            sensor_range: 3.0,
            step_budget: 10_000,
            cells_per_step: 1,
            min_frontier_size: DEFAULT_MIN_FRONTIER_SIZE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// No frontier cells remain.
    Complete,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub records: Vec<ObservationRecord>,
    pub termination: Termination,
    pub grid: OccupancyGrid,
}

/// Builds the textual observation for a set of visible objects.
pub fn observation_token(scene: &SceneDescription, ids: &[u32]) -> String {
    let mut seen: Vec<_> = ids.iter().filter_map(|&id| scene.object(id)).collect();
    if seen.is_empty() {
        return "objects: none".to_string();
    }
    seen.sort_by(|a, b| a.label.cmp(&b.label).then(a.id.cmp(&b.id)));
    let parts: Vec<String> = seen
        .iter()
        .map(|o| format!("{} ({})", o.label, o.description))
        .collect();
    format!("objects: {}", parts.join(", "))
}

/// Frontier-driven explorer. Each [`step`](Explorer::step) senses from the
/// current cell, updates the grid, and moves toward the committed frontier
/// target along explored free cells.
pub struct Explorer<'a> {
    scene: &'a SceneDescription,
    params: ExploreParams,
    truth: BlockedMask,
    grid: OccupancyGrid,
    /// Object ids per grid cell.
    objects_at: Vec<Vec<u32>>,
    pos: Cell,
    heading: f64,
    target: Option<Cell>,
    t: u64,
    finished: bool,
}

impl<'a> Explorer<'a> {
    pub fn new(
        scene: &'a SceneDescription,
        start: Point2,
        params: ExploreParams,
    ) -> Result<Self, SimError> {
        if !(params.resolution > 0.0) || params.sensor_range < params.resolution {
            return Err(SimError::InvalidConfig(
                "sensor range must be at least one grid cell".into(),
            ));
        }
        if params.cells_per_step == 0 {
            return Err(SimError::InvalidConfig("cells_per_step must be at least 1".into()));
        }
        let truth = scene.blocked_mask(params.resolution);
        let start_cell = truth
            .cell_of(&start)
            .filter(|&(c, r)| !truth.is_blocked(c, r) && !scene.in_obstacle(&start))
            .ok_or(SimError::InvalidStart(start))?;
        let mut objects_at = vec![Vec::new(); truth.cols * truth.rows];
        for obj in &scene.objects {
            if let Some((c, r)) = truth.cell_of(&obj.position()) {
                objects_at[r * truth.cols + c].push(obj.id);
            }
        }
        let grid = OccupancyGrid::new(truth.origin, truth.resolution, truth.cols, truth.rows);
        Ok(Self {
            scene,
            params,
            truth,
            grid,
            objects_at,
            pos: start_cell,
            heading: 0.0,
            target: None,
            t: 0,
            finished: false,
        })
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// Runs one sense/update/move cycle. Returns `None` once exploration is
    /// complete or the step budget is spent.
    pub fn step(&mut self) -> Option<ObservationRecord> {
        if self.finished || self.t as usize >= self.params.step_budget {
            return None;
        }
        let visible = self.sense();
        let mut ids: Vec<u32> = visible
            .iter()
            .flat_map(|&(c, r)| self.objects_at[r * self.truth.cols + c].iter().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let here = self.grid.center(self.pos);
        let record = ObservationRecord {
            t: self.t,
            pose: Pose {
                x: here.x,
                y: here.y,
                heading: self.heading,
            },
            obs_token: observation_token(self.scene, &ids),
            visible_object_ids: ids,
        };
        self.t += 1;
        self.advance();
        Some(record)
    }

    /// Marks every cell within sensor range that has a clear line of sight.
    /// Cells crossed by a clear ray are marked too, which keeps the explored
    /// region four-connected. Returns the cells seen this step.
    fn sense(&mut self) -> BTreeSet<Cell> {
        let reach = (self.params.sensor_range / self.params.resolution).floor() as i64;
        let (pc, pr) = (self.pos.0 as i64, self.pos.1 as i64);
        let range_sq = (self.params.sensor_range / self.params.resolution).powi(2);
        let mut seen = BTreeSet::new();
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let (c, r) = (pc + dc, pr + dr);
                if c < 0 || r < 0 || c as usize >= self.truth.cols || r as usize >= self.truth.rows {
                    continue;
                }
                if (dc * dc + dr * dr) as f64 > range_sq + 1e-9 {
                    continue;
                }
                let ray = supercover(self.pos, (c as usize, r as usize));
                let (last, between) = ray.split_last().expect("ray contains its endpoint");
                if between.iter().any(|&(c, r)| self.truth.is_blocked(c, r)) {
                    continue;
                }
                for &cell in between {
                    self.grid.reveal(cell, CellState::Explored);
                    seen.insert(cell);
                }
                let state = if self.truth.is_blocked(last.0, last.1) {
                    CellState::Obstacle
                } else {
                    seen.insert(*last);
                    CellState::Explored
                };
                self.grid.reveal(*last, state);
            }
        }
        seen
    }

    fn advance(&mut self) {
        let mut clusters = detect_frontiers(&self.grid, self.params.min_frontier_size);
        if clusters.is_empty() {
            // Small clusters are only ignored while larger ones remain;
            // otherwise an isolated frontier cell would end exploration early.
            clusters = detect_frontiers(&self.grid, 1);
        }
        if clusters.is_empty() {
            self.finished = true;
            return;
        }
        let keep = self
            .target
            .filter(|&t| t != self.pos && self.grid.is_frontier(t));
        let target = match keep {
            Some(t) => t,
            None => {
                let here = self.grid.center(self.pos);
                let idx = select_frontier_index(&clusters, here).expect("clusters non-empty");
                let centroid = clusters[idx].centroid;
                *clusters[idx]
                    .cells
                    .iter()
                    .min_by(|a, b| {
                        self.grid
                            .center(**a)
                            .distance_sq(&centroid)
                            .total_cmp(&self.grid.center(**b).distance_sq(&centroid))
                    })
                    .expect("clusters are non-empty")
            }
        };
        self.target = Some(target);
        let Some(path) = self.explored_path(self.pos, target) else {
            // Unreachable through explored space; drop the target.
            self.target = None;
            return;
        };
        let next = path[self.params.cells_per_step.min(path.len() - 1)];
        if next != self.pos {
            let from = self.grid.center(self.pos);
            let to = self.grid.center(next);
            self.heading = (to.y - from.y).atan2(to.x - from.x);
            self.pos = next;
        }
    }

    /// Shortest four-connected path through explored cells, inclusive of
    /// both ends.
    fn explored_path(&self, from: Cell, to: Cell) -> Option<Vec<Cell>> {
        let cols = self.grid.cols();
        let mut prev = vec![usize::MAX; cols * self.grid.rows()];
        let idx = |(c, r): Cell| r * cols + c;
        prev[idx(from)] = idx(from);
        let mut queue = VecDeque::from([from]);
        while let Some(cell) = queue.pop_front() {
            if cell == to {
                let mut path = vec![to];
                let mut cur = idx(to);
                while cur != idx(from) {
                    cur = prev[cur];
                    path.push((cur % cols, cur / cols));
                }
                path.reverse();
                return Some(path);
            }
            for n in self.grid.neighbors4(cell) {
                if prev[idx(n)] == usize::MAX && self.grid.get(n) == CellState::Explored {
                    prev[idx(n)] = idx(cell);
                    queue.push_back(n);
                }
            }
        }
        None
    }
}

/// Cells crossed by the segment between two cell centers, in order, ending
/// with `to`. When the segment passes exactly through a grid corner both
/// side cells are included, so consecutive cells are always four-adjacent.
pub(crate) fn supercover(from: Cell, to: Cell) -> Vec<Cell> {
    let dx = to.0 as i64 - from.0 as i64;
    let dy = to.1 as i64 - from.1 as i64;
    let (nx, ny) = (dx.abs(), dy.abs());
    let (sx, sy) = (dx.signum(), dy.signum());
    let (mut x, mut y) = (from.0 as i64, from.1 as i64);
    let (mut ix, mut iy) = (0, 0);
    let mut out = Vec::with_capacity((nx + ny + 1) as usize);
    while ix < nx || iy < ny {
        let decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx;
        if decision == 0 {
            out.push(((x + sx) as usize, y as usize));
            out.push((x as usize, (y + sy) as usize));
            x += sx;
            y += sy;
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            x += sx;
            ix += 1;
        } else {
            y += sy;
            iy += 1;
        }
        out.push((x as usize, y as usize));
    }
    if out.is_empty() {
        out.push(from);
    }
    out
}

/// Runs exploration to completion or budget exhaustion.
pub fn explore_detailed(
    scene: &SceneDescription,
    start: Point2,
    params: &ExploreParams,
) -> Result<Exploration, SimError> {
    let mut explorer = Explorer::new(scene, start, params.clone())?;
    let mut records = Vec::new();
    while let Some(rec) = explorer.step() {
        records.push(rec);
    }
    let termination = if explorer.is_finished() {
        Termination::Complete
    } else {
        Termination::BudgetExhausted
    };
    Ok(Exploration {
        records,
        termination,
        grid: explorer.grid,
    })
}

/// Runs frontier exploration and returns the observation stream.
pub fn explore(
    scene: &SceneDescription,
    start: Point2,
    params: &ExploreParams,
) -> Result<Vec<ObservationRecord>, SimError> {
    explore_detailed(scene, start, params).map(|e| e.records)
}

/// Writes a stream as JSON Lines.
pub fn write_stream(path: &Path, records: &[ObservationRecord]) -> Result<(), SimError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSON Lines stream, checking that timestamps strictly increase.
pub fn read_stream(path: &Path) -> Result<Vec<ObservationRecord>, SimError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut records: Vec<ObservationRecord> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ObservationRecord = serde_json::from_str(&line)
            .map_err(|e| SimError::InvalidStream(format!("line {}: {e}", lineno + 1)))?;
        if let Some(prev) = records.last() {
            if rec.t <= prev.t {
                return Err(SimError::InvalidStream(format!(
                    "line {}: timestamp {} does not increase",
                    lineno + 1,
                    rec.t
                )));
            }
        }
        records.push(rec);
    }
    Ok(records)
}
