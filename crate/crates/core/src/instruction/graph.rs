use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::InstructionError;

pub type TaskId = u32;

/// One navigation goal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: TaskId,
    pub target_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_text: Option<String>,
    #[serde(default)]
    pub context_texts: Vec<String>,
}

/// Tasks plus their ordering constraints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskGraph {
    pub tasks: Vec<Task>,
    /// `(before, after)` pairs.
    pub temporal_edges: Vec<(TaskId, TaskId)>,
    /// Task ids in the order the instruction mentions them.
    pub semantic_sequence: Vec<TaskId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dependency {
    Spatial,
    Temporal,
    Independent,
}

impl TaskGraph {
    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    fn index(&self, id: TaskId) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    /// Successor lists by task index.
    fn successors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.tasks.len()];
        for &(a, b) in &self.temporal_edges {
            if let (Some(i), Some(j)) = (self.index(a), self.index(b)) {
                out[i].push(j);
            }
        }
        out
    }

    /// Checks ids, edge endpoints, acyclicity and that the semantic sequence
    /// is a topological order.
    pub fn validate(&self) -> Result<(), InstructionError> {
        let bad = |m: String| Err(InstructionError::InvalidGraph(m));
        if self.tasks.is_empty() {
            return bad("graph has no tasks".into());
        }
        let mut ids: Vec<TaskId> = self.tasks.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate task id".into());
        }
        for t in &self.tasks {
            if t.target_text.trim().is_empty() {
                return bad(format!("task {} has an empty target", t.id));
            }
            if t.anchor_text.as_deref().is_some_and(|a| a.trim().is_empty()) {
                return bad(format!("task {} has an empty anchor", t.id));
            }
            if t.context_texts.iter().any(|c| c.trim().is_empty()) {
                return bad(format!("task {} has an empty context", t.id));
            }
        }
        for &(a, b) in &self.temporal_edges {
            if self.index(a).is_none() || self.index(b).is_none() {
                return bad(format!("edge ({a}, {b}) references a missing task"));
            }
            if a == b {
                return bad(format!("self-loop on task {a}"));
            }
        }
        let mut seq = self.semantic_sequence.clone();
        seq.sort_unstable();
        if seq != ids {
            return bad("semantic sequence is not a permutation of the task ids".into());
        }
        if self.layers().is_none() {
            return bad("temporal edges contain a cycle".into());
        }
        let pos = |id: TaskId| self.semantic_sequence.iter().position(|&x| x == id);
        for &(a, b) in &self.temporal_edges {
            if pos(a) > pos(b) {
                return bad(format!("semantic sequence puts {b} before {a} against edge ({a}, {b})"));
            }
        }
        Ok(())
    }

    /// Tasks grouped by longest-path depth in the temporal DAG, ids
    /// ascending in each layer; `None` if the edges contain a cycle.
    pub fn layers(&self) -> Option<Vec<Vec<TaskId>>> {
        let n = self.tasks.len();
        let succ = self.successors();
        let mut indeg = vec![0usize; n];
        for s in &succ {
            for &j in s {
                indeg[j] += 1;
            }
        }
        let mut depth = vec![0usize; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = queue.pop_front() {
            seen += 1;
            for &j in &succ[i] {
                depth[j] = depth[j].max(depth[i] + 1);
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
        if seen < n {
            return None;
        }
        let levels = depth.iter().copied().max().map_or(0, |d| d + 1);
        let mut out = vec![Vec::new(); levels];
        for (i, t) in self.tasks.iter().enumerate() {
            out[depth[i]].push(t.id);
        }
        for l in &mut out {
            l.sort_unstable();
        }
        Some(out)
    }

    /// Whether a chain of temporal edges leads from `a` to `b`.
    pub fn reaches(&self, a: TaskId, b: TaskId) -> bool {
        let (Some(start), Some(goal)) = (self.index(a), self.index(b)) else {
            return false;
        };
        let succ = self.successors();
        let mut seen = vec![false; self.tasks.len()];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &j in &succ[i] {
                if j == goal {
                    return true;
                }
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        false
    }

    /// Edges `(before, after)` of the transitive closure.
    pub fn precedence_pairs(&self) -> Vec<(TaskId, TaskId)> {
        let mut out = Vec::new();
        for a in &self.tasks {
            for b in &self.tasks {
                if a.id != b.id && self.reaches(a.id, b.id) {
                    out.push((a.id, b.id));
                }
            }
        }
        out
    }
}

fn same_text(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

/// Relation between two tasks. A spatial link (one task's anchor is the
/// other's target) takes precedence over a temporal one.
pub fn classify_dependency(graph: &TaskGraph, a: TaskId, b: TaskId) -> Dependency {
    let (Some(ta), Some(tb)) = (graph.task(a), graph.task(b)) else {
        return Dependency::Independent;
    };
    let anchors = |x: &Task, y: &Task| x.anchor_text.as_deref().is_some_and(|an| same_text(an, &y.target_text));
    if a != b && (anchors(ta, tb) || anchors(tb, ta)) {
        Dependency::Spatial
    } else if graph.reaches(a, b) || graph.reaches(b, a) {
        Dependency::Temporal
    } else {
        Dependency::Independent
    }
}
