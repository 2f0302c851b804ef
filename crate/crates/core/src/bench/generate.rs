use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::env_sim::{SceneDescription, SceneObject};
use crate::instruction::TaskId;
use crate::memory::{build_memory_from_places, Memory, MemoryParams, Summarizer};
use crate::retrieval::Embedder;
use crate::vocab::{anchor_labels, context_labels, filler_labels, target_labels, LabelSpec};
use crate::{NodeId, Position, Rect};

/// Suite shape. Nodes sit on a jittered lattice, one object per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchParams {
    pub cases: usize,
    pub mean_nodes: usize,
    /// Node counts are drawn uniformly from `mean ± spread`.
    pub node_spread: usize,
    pub min_tasks: usize,
    pub max_tasks: usize,
    /// Probability that a task names an anchor.
    pub anchor_rate: f64,
    /// Probability that a task names a co-occurring context object.
    pub context_rate: f64,
    /// Copies of the target planted away from its anchor and context.
    pub decoys_per_task: usize,
    /// Lattice pitch in meters.
    pub spacing: f64,
    /// Uniform jitter applied to each lattice coordinate, meters.
    pub jitter: f64,
    pub columns: usize,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            cases: 14,
            mean_nodes: 80,
            node_spread: 20,
            min_tasks: 1,
            max_tasks: 3,
            anchor_rate: 1.0,
            context_rate: 0.5,
            decoys_per_task: 2,
            spacing: 2.0,
            jitter: 0.4,
            columns: 10,
        }
    }
}

impl BenchParams {
    /// Memory parameters matched to the lattice: lattice neighbors are
    /// connected and diagonal ones may be.
    pub fn memory_params(&self) -> MemoryParams {
        MemoryParams {
            delta_spatial: 1.5 * self.spacing,
            ..MemoryParams::default()
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        let fail = |m: String| Err(BenchError::Generation(m));
        if self.cases == 0 {
            return fail("cases must be at least 1".into());
        }
        if self.min_tasks == 0 || self.max_tasks < self.min_tasks {
            return fail(format!("task range {}..={} is empty", self.min_tasks, self.max_tasks));
        }
        let limit = target_labels().len().min(anchor_labels().len()).min(context_labels().len());
        if self.max_tasks > limit {
            return fail(format!("at most {limit} tasks per case are supported"));
        }
        if self.node_spread > self.mean_nodes {
            return fail("node_spread exceeds mean_nodes".into());
        }
        let needed = self.max_tasks * (3 + self.decoys_per_task);
        if self.mean_nodes - self.node_spread < needed {
            return fail(format!(
                "{} nodes cannot hold {} tasks with {} decoys each",
                self.mean_nodes - self.node_spread,
                self.max_tasks,
                self.decoys_per_task
            ));
        }
        if !(0.0..=1.0).contains(&self.anchor_rate) || !(0.0..=1.0).contains(&self.context_rate) {
            return fail("rates must lie in [0, 1]".into());
        }
        if !(self.spacing > 0.0) || !(0.0..self.spacing / 4.0).contains(&self.jitter) || self.columns < 3 {
            return fail("need spacing > 0, 0 <= jitter < spacing / 4 and columns >= 3".into());
        }
        Ok(())
    }
}

/// One benchmark episode with its answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkCase {
    pub seed: u64,
    pub scene: SceneDescription,
    pub instruction: String,
    /// Correct node for every task id of the parsed instruction.
    pub ground_truth: BTreeMap<TaskId, NodeId>,
    /// Node the agent starts from.
    #[serde(default)]
    pub start_node: NodeId,
}

impl BenchmarkCase {
    /// Builds the case's memory: node `k` is scene object `k`.
    pub fn memory(
        &self,
        params: &MemoryParams,
        embedder: &dyn Embedder,
        summarizer: &dyn Summarizer,
    ) -> Result<Memory, BenchError> {
        let places: Vec<(Position, String)> = self
            .scene
            .objects
            .iter()
            .map(|o| (Position::planar(o.x, o.y), o.description.clone()))
            .collect();
        Ok(build_memory_from_places(&places, params, embedder, summarizer)?)
    }
}

struct TaskSpec {
    target: LabelSpec,
    anchor: Option<LabelSpec>,
    context: Option<LabelSpec>,
}

struct Layout<'a> {
    p: &'a BenchParams,
    n: usize,
    positions: Vec<(f64, f64)>,
    labels: Vec<Option<LabelSpec>>,
}

impl Layout<'_> {
    fn lattice_neighbors(&self, k: usize) -> Vec<usize> {
        let c = self.p.columns;
        let mut out = Vec::new();
        if k % c > 0 {
            out.push(k - 1);
        }
        if k % c + 1 < c && k + 1 < self.n {
            out.push(k + 1);
        }
        if k >= c {
            out.push(k - c);
        }
        if k + c < self.n {
            out.push(k + c);
        }
        out
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.positions[a], self.positions[b]);
        ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt()
    }

    fn free(&self) -> Vec<usize> {
        (0..self.n).filter(|&k| self.labels[k].is_none()).collect()
    }

    /// Places one task; returns the ground-truth cell.
    fn place(&mut self, task: &TaskSpec, rng: &mut ChaCha8Rng) -> Option<usize> {
        let mut free = self.free();
        free.shuffle(rng);
        let (gt, helpers) = free.iter().find_map(|&g| {
            let mut around: Vec<usize> =
                self.lattice_neighbors(g).into_iter().filter(|&k| self.labels[k].is_none()).collect();
            around.shuffle(rng);
            let wanted = usize::from(task.anchor.is_some()) + usize::from(task.context.is_some());
            (around.len() >= wanted).then(|| (g, around[..wanted].to_vec()))
        })?;
        self.labels[gt] = Some(task.target.clone());
        let mut constraint_cells = Vec::new();
        for (cell, spec) in helpers.iter().zip(task.anchor.iter().chain(task.context.iter())) {
            self.labels[*cell] = Some(spec.clone());
            constraint_cells.push(*cell);
        }
        if constraint_cells.is_empty() {
            return Some(gt);
        }
        // Decoys must be out of edge range of every anchor and context
        // object of this task.
        let far = 2.0 * self.p.memory_params().delta_spatial;
        let mut spots: Vec<usize> = self
            .free()
            .into_iter()
            .filter(|&k| constraint_cells.iter().all(|&c| self.distance(k, c) > far))
            .collect();
        if spots.len() < self.p.decoys_per_task {
            return None;
        }
        spots.shuffle(rng);
        for &k in &spots[..self.p.decoys_per_task] {
            self.labels[k] = Some(task.target.clone());
        }
        Some(gt)
    }
}

fn generate_case(p: &BenchParams, seed: u64) -> Result<BenchmarkCase, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(p.mean_nodes - p.node_spread..=p.mean_nodes + p.node_spread);
    let positions: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let (c, r) = ((k % p.columns) as f64, (k / p.columns) as f64);
            (
                (c + 0.5) * p.spacing + rng.gen_range(-p.jitter..=p.jitter),
                (r + 0.5) * p.spacing + rng.gen_range(-p.jitter..=p.jitter),
            )
        })
        .collect();
    let task_count = rng.gen_range(p.min_tasks..=p.max_tasks);
    let mut targets = target_labels();
    let mut anchors = anchor_labels();
    let mut contexts = context_labels();
    targets.shuffle(&mut rng);
    anchors.shuffle(&mut rng);
    contexts.shuffle(&mut rng);
    let tasks: Vec<TaskSpec> = (0..task_count)
        .map(|k| TaskSpec {
            target: targets[k].clone(),
            anchor: rng.gen_bool(p.anchor_rate).then(|| anchors[k].clone()),
            context: rng.gen_bool(p.context_rate).then(|| contexts[k].clone()),
        })
        .collect();

    let mut layout = Layout {
        p,
        n,
        positions,
        labels: vec![None; n],
    };
    let mut gt_cells = Vec::new();
    for t in &tasks {
        let cell = layout.place(t, &mut rng).ok_or_else(|| {
            BenchError::Generation(format!("case seed {seed}: no room for task '{}' and its decoys", t.target.label))
        })?;
        gt_cells.push(cell);
    }
    let fillers = filler_labels();
    for slot in layout.labels.iter_mut().filter(|l| l.is_none()) {
        *slot = Some(fillers.choose(&mut rng).expect("filler vocabulary is non-empty").clone());
    }

    let mut text = String::new();
    for (k, t) in tasks.iter().enumerate() {
        if k > 0 {
            text.push_str(if rng.gen_bool(0.5) { " then " } else { " and " });
        }
        text.push_str(&t.target.label);
        if let Some(a) = &t.anchor {
            text.push_str(" near ");
            text.push_str(&a.label);
        }
        if let Some(c) = &t.context {
            text.push_str(" with ");
            text.push_str(&c.label);
        }
    }
    let rows = n.div_ceil(p.columns);
    let scene = SceneDescription {
        bounds: Rect::new(0.0, 0.0, p.columns as f64 * p.spacing, rows as f64 * p.spacing),
        obstacles: Vec::new(),
        objects: layout
            .labels
            .into_iter()
            .zip(&layout.positions)
            .enumerate()
            .map(|(k, (spec, &(x, y)))| {
                let spec = spec.expect("every cell is filled");
                SceneObject {
                    id: k as u32,
                    label: spec.label,
                    description: spec.description,
                    x,
                    y,
                }
            })
            .collect(),
        rng_seed: seed,
    };
    Ok(BenchmarkCase {
        seed,
        scene,
        instruction: text,
        ground_truth: gt_cells.iter().enumerate().map(|(k, &c)| (k as TaskId + 1, c as NodeId)).collect(),
        start_node: rng.gen_range(0..n as NodeId),
    })
}

/// Generates a suite. Equal `(params, seed)` give equal suites.
pub fn generate_benchmark(params: &BenchParams, seed: u64) -> Result<Vec<BenchmarkCase>, BenchError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..params.cases).map(|_| rng.gen()).collect();
    seeds.into_iter().map(|s| generate_case(params, s)).collect()
}

/// Writes a suite as JSON Lines.
pub fn write_suite(path: &Path, cases: &[BenchmarkCase]) -> Result<(), BenchError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for c in cases {
        serde_json::to_writer(&mut out, c)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSON Lines suite, skipping blank lines.
pub fn read_suite(path: &Path) -> Result<Vec<BenchmarkCase>, BenchError> {
    let mut cases = Vec::new();
    for (k, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let case: BenchmarkCase = serde_json::from_str(&line)
            .map_err(|e| BenchError::Generation(format!("{}:{}: {e}", path.display(), k + 1)))?;
        case.validate()?;
        cases.push(case);
    }
    Ok(cases)
}

impl BenchmarkCase {
    /// Ground truth must name existing nodes and cover every parsed task.
    pub fn validate(&self) -> Result<(), BenchError> {
        self.scene.validate().map_err(|e| BenchError::Generation(e.to_string()))?;
        let n = self.scene.objects.len();
        for (k, o) in self.scene.objects.iter().enumerate() {
            if o.id as usize != k {
                return Err(BenchError::Generation(format!("object {k} has id {}", o.id)));
            }
        }
        let graph = crate::instruction::parse(&self.instruction)?;
        let ids: Vec<TaskId> = graph.tasks.iter().map(|t| t.id).collect();
        if !ids.iter().eq(self.ground_truth.keys()) {
            return Err(BenchError::Generation("ground truth does not cover the instruction's tasks".into()));
        }
        if let Some(bad) = self.ground_truth.values().chain([&self.start_node]).find(|&&v| v as usize >= n) {
            return Err(BenchError::Generation(format!("node {bad} does not exist")));
        }
        Ok(())
    }
}
