use std::collections::{HashSet, VecDeque};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geometry::{Point2, Rect};
use crate::vocab::{all_labels, LabelSpec};

/// An object placed in a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub id: u32,
    pub label: String,
    pub description: String,
    pub x: f64,
    pub y: f64,
}

impl SceneObject {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// A synthetic 2D environment: a bounded floor with rectangular obstacles
/// and labelled objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescription {
    pub bounds: Rect,
    pub obstacles: Vec<Rect>,
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub rng_seed: u64,
}

/// Parameters for [`generate_scene`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub width: f64,
    pub height: f64,
    pub obstacles: usize,
    pub obstacle_min: f64,
    pub obstacle_max: f64,
    pub objects: usize,
    pub min_separation: f64,
    /// Grid resolution used for the free-space connectivity check.
    pub resolution: f64,
    /// Reject obstacles that would split the free space into several parts.
    pub require_connected: bool,
    pub max_attempts: usize,
    pub vocabulary: Vec<LabelSpec>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 20.0,
            height: 20.0,
            obstacles: 6,
            obstacle_min: 1.0,
            obstacle_max: 4.0,
            objects: 12,
            min_separation: 1.0,
            resolution: 1.0,
            require_connected: true,
            max_attempts: 10_000,
            vocabulary: all_labels(),
        }
    }
}

impl SceneDescription {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = fs::read_to_string(path)?;
        let scene: SceneDescription = serde_json::from_str(&text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn in_obstacle(&self, p: &Point2) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Checks the structural invariants: objects inside the bounds and
    /// outside every obstacle, unique ids and non-empty labels.
    pub fn validate(&self) -> Result<(), SimError> {
        if !self.bounds.is_valid() {
            return Err(SimError::InvalidScene("bounds must have positive extent".into()));
        }
        let mut ids = HashSet::new();
        for obj in &self.objects {
            if !ids.insert(obj.id) {
                return Err(SimError::InvalidScene(format!("duplicate object id {}", obj.id)));
            }
            if obj.label.trim().is_empty() {
                return Err(SimError::InvalidScene(format!("object {} has an empty label", obj.id)));
            }
            let p = obj.position();
            if !self.bounds.contains(&p) {
                return Err(SimError::InvalidScene(format!("object {} lies outside the bounds", obj.id)));
            }
            if self.in_obstacle(&p) {
                return Err(SimError::InvalidScene(format!("object {} lies inside an obstacle", obj.id)));
            }
        }
        Ok(())
    }

    /// Ground-truth blocked mask at the given resolution. A cell is blocked
    /// when its center lies inside an obstacle.
    pub fn blocked_mask(&self, resolution: f64) -> BlockedMask {
        let cols = (self.bounds.width() / resolution).ceil().max(1.0) as usize;
        let rows = (self.bounds.height() / resolution).ceil().max(1.0) as usize;
        let origin = Point2::new(self.bounds.min_x, self.bounds.min_y);
        let mut blocked = vec![false; cols * rows];
        for r in 0..rows {
            for c in 0..cols {
                let center = Point2::new(
                    origin.x + (c as f64 + 0.5) * resolution,
                    origin.y + (r as f64 + 0.5) * resolution,
                );
                blocked[r * cols + c] = self.in_obstacle(&center);
            }
        }
        BlockedMask {
            origin,
            resolution,
            cols,
            rows,
            blocked,
        }
    }

    /// Center of the free cell closest to the middle of the scene.
    pub fn default_start(&self, resolution: f64) -> Option<Point2> {
        let mask = self.blocked_mask(resolution);
        let mid = self.bounds.center();
        (0..mask.cols * mask.rows)
            .filter(|&i| !mask.blocked[i])
            .map(|i| mask.center(i % mask.cols, i / mask.cols))
            .min_by(|a, b| a.distance_sq(&mid).total_cmp(&b.distance_sq(&mid)))
    }
}

/// Ground-truth occupancy of a scene discretised onto a grid.
#[derive(Debug, Clone)]
pub struct BlockedMask {
    pub origin: Point2,
    pub resolution: f64,
    pub cols: usize,
    pub rows: usize,
    pub blocked: Vec<bool>,
}

impl BlockedMask {
    pub fn center(&self, col: usize, row: usize) -> Point2 {
        Point2::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_of(&self, p: &Point2) -> Option<(usize, usize)> {
        let c = ((p.x - self.origin.x) / self.resolution).floor();
        let r = ((p.y - self.origin.y) / self.resolution).floor();
        if c < 0.0 || r < 0.0 {
            return None;
        }
        // Points on the far boundary belong to the last cell.
        let c = (c as usize).min(self.cols - 1);
        let r = (r as usize).min(self.rows - 1);
        if p.x > self.origin.x + self.cols as f64 * self.resolution
            || p.y > self.origin.y + self.rows as f64 * self.resolution
        {
            return None;
        }
        Some((c, r))
    }

    pub fn is_blocked(&self, col: usize, row: usize) -> bool {
        self.blocked[row * self.cols + col]
    }

    /// Free cells four-connected to `start` (flood fill).
    pub fn reachable_from(&self, start: (usize, usize)) -> Vec<bool> {
        let mut seen = vec![false; self.cols * self.rows];
        if self.is_blocked(start.0, start.1) {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen[start.1 * self.cols + start.0] = true;
        while let Some((c, r)) = queue.pop_front() {
            for (nc, nr) in neighbors4(c, r, self.cols, self.rows) {
                let i = nr * self.cols + nc;
                if !seen[i] && !self.blocked[i] {
                    seen[i] = true;
                    queue.push_back((nc, nr));
                }
            }
        }
        seen
    }

    pub fn free_space_connected(&self) -> bool {
        let Some(first) = self.blocked.iter().position(|b| !b) else {
            return false;
        };
        let reach = self.reachable_from((first % self.cols, first / self.cols));
        reach
            .iter()
            .zip(&self.blocked)
            .all(|(&seen, &blocked)| seen || blocked)
    }
}

pub(crate) fn neighbors4(
    c: usize,
    r: usize,
    cols: usize,
    rows: usize,
) -> impl Iterator<Item = (usize, usize)> {
    let mut out = [(usize::MAX, usize::MAX); 4];
    if r > 0 {
        out[0] = (c, r - 1);
    }
    if c > 0 {
        out[1] = (c - 1, r);
    }
    if c + 1 < cols {
        out[2] = (c + 1, r);
    }
    if r + 1 < rows {
        out[3] = (c, r + 1);
    }
    out.into_iter().filter(|&(c, _)| c != usize::MAX)
}

/// Generates a random scene. The result depends only on `(config, seed)`.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<SceneDescription, SimError> {
    if !(config.width > 0.0 && config.height > 0.0 && config.resolution > 0.0) {
        return Err(SimError::InvalidConfig("width, height and resolution must be positive".into()));
    }
    if config.objects > 0 && config.vocabulary.is_empty() {
        return Err(SimError::InvalidConfig("vocabulary is empty".into()));
    }
    if config.obstacle_min <= 0.0 || config.obstacle_max < config.obstacle_min {
        return Err(SimError::InvalidConfig("obstacle size range is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = Rect::new(0.0, 0.0, config.width, config.height);
    let mut scene = SceneDescription {
        bounds,
        obstacles: Vec::new(),
        objects: Vec::new(),
        rng_seed: seed,
    };

    let mut attempts = 0;
    while scene.obstacles.len() < config.obstacles && attempts < config.max_attempts {
        attempts += 1;
        let w = rng.gen_range(config.obstacle_min..=config.obstacle_max).min(config.width);
        let h = rng.gen_range(config.obstacle_min..=config.obstacle_max).min(config.height);
        let x = rng.gen_range(0.0..=(config.width - w));
        let y = rng.gen_range(0.0..=(config.height - h));
        scene.obstacles.push(Rect::new(x, y, x + w, y + h));
        let mask = scene.blocked_mask(config.resolution);
        let ok = if config.require_connected {
            mask.free_space_connected()
        } else {
            mask.blocked.iter().any(|b| !b)
        };
        if !ok {
            scene.obstacles.pop();
        }
    }

    let mask = scene.blocked_mask(config.resolution);
    let free_cells = mask.blocked.iter().filter(|b| !**b).count();
    let free_area = free_cells as f64 * config.resolution * config.resolution;
    // Each object claims a disc of radius min_separation / 2.
    let claimed = config.objects as f64
        * std::f64::consts::PI
        * (0.5 * config.min_separation).powi(2);
    if claimed > free_area {
        return Err(SimError::PlacementFailed {
            placed: 0,
            requested: config.objects,
        });
    }

    let mut labels = config.vocabulary.clone();
    labels.shuffle(&mut rng);
    let mut attempts = 0;
    while scene.objects.len() < config.objects {
        if attempts >= config.max_attempts {
            return Err(SimError::PlacementFailed {
                placed: scene.objects.len(),
                requested: config.objects,
            });
        }
        attempts += 1;
        let p = Point2::new(
            rng.gen_range(0.0..config.width),
            rng.gen_range(0.0..config.height),
        );
        let Some((c, r)) = mask.cell_of(&p) else { continue };
        if mask.is_blocked(c, r) || scene.in_obstacle(&p) {
            continue;
        }
        if scene
            .objects
            .iter()
            .any(|o| o.position().distance(&p) < config.min_separation)
        {
            continue;
        }
        let spec = &labels[scene.objects.len() % labels.len()];
        scene.objects.push(SceneObject {
            id: scene.objects.len() as u32,
            label: spec.label.clone(),
            description: spec.description.clone(),
            x: p.x,
            y: p.y,
        });
    }
    scene.validate()?;
    Ok(scene)
}
