use serde::{Deserialize, Serialize};

use super::graph::{TaskGraph, TaskId};
use super::InstructionError;
use crate::memory::Memory;
use crate::retrieval::{retrieve, Embedder, Query, RetrievalError, RetrievalResult, SearchMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// Locate the anchor object a task is conditioned on.
    ResolveAnchor,
    /// Retrieve the task's target.
    Retrieve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub index: usize,
    pub task_id: TaskId,
    pub kind: StepKind,
    pub batch: usize,
    /// Indices of steps that must finish first.
    pub depends_on: Vec<usize>,
    pub query: Query,
}

/// Ordered retrieval steps. Steps sharing a batch are independent of each
/// other and may run concurrently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalPlan {
    pub steps: Vec<PlanStep>,
    pub batches: Vec<Vec<usize>>,
}

/// Turns a task graph into retrieval steps.
///
/// Temporal layers are scheduled in order. Within a layer, anchors are
/// resolved in one batch and targets retrieved in the next; a target step
/// depends on its anchor step and on every target step of the previous
/// layer. `template` supplies the retrieval parameters.
pub fn schedule(graph: &TaskGraph, template: &Query) -> Result<RetrievalPlan, InstructionError> {
    graph.validate()?;
    let layers = graph.layers().expect("validated graphs are acyclic");
    let mut steps: Vec<PlanStep> = Vec::new();
    let mut batches: Vec<Vec<usize>> = Vec::new();
    let mut previous_targets: Vec<usize> = Vec::new();
    for layer in layers {
        let mut anchor_step = std::collections::BTreeMap::new();
        let anchored: Vec<TaskId> = layer
            .iter()
            .copied()
            .filter(|&id| graph.task(id).is_some_and(|t| t.anchor_text.is_some()))
            .collect();
        if !anchored.is_empty() {
            let mut batch = Vec::new();
            for id in anchored {
                let task = graph.task(id).expect("layer ids exist");
                let index = steps.len();
                steps.push(PlanStep {
                    index,
                    task_id: id,
                    kind: StepKind::ResolveAnchor,
                    batch: batches.len(),
                    depends_on: previous_targets.clone(),
                    query: Query {
                        target_text: task.anchor_text.clone().expect("filtered on anchor"),
                        anchor_text: None,
                        context_texts: Vec::new(),
                        mode: SearchMode::Forest,
                        ..template.clone()
                    },
                });
                anchor_step.insert(id, index);
                batch.push(index);
            }
            batches.push(batch);
        }
        let mut batch = Vec::new();
        for &id in &layer {
            let task = graph.task(id).expect("layer ids exist");
            let index = steps.len();
            let mut depends_on = previous_targets.clone();
            depends_on.extend(anchor_step.get(&id));
            steps.push(PlanStep {
                index,
                task_id: id,
                kind: StepKind::Retrieve,
                batch: batches.len(),
                depends_on,
                query: Query {
                    target_text: task.target_text.clone(),
                    anchor_text: task.anchor_text.clone(),
                    context_texts: task.context_texts.clone(),
                    ..template.clone()
                },
            });
            batch.push(index);
        }
        batches.push(batch);
        previous_targets = batches.last().expect("just pushed").clone();
    }
    Ok(RetrievalPlan { steps, batches })
}

/// Outcome of one executed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub step: usize,
    pub task_id: TaskId,
    pub kind: StepKind,
    pub result: RetrievalResult,
}

/// Runs every step of `plan` in order.
pub fn execute(plan: &RetrievalPlan, memory: &Memory, embedder: &dyn Embedder) -> Result<Vec<StepOutcome>, RetrievalError> {
    plan.steps
        .iter()
        .map(|s| {
            Ok(StepOutcome {
                step: s.index,
                task_id: s.task_id,
                kind: s.kind,
                result: retrieve(memory, embedder, &s.query)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instruction::parse;
    use proptest::prelude::*;

    #[test]
    fn single_task_single_step() {
        let p = schedule(&parse("sofa").unwrap(), &Query::default()).unwrap();
        assert_eq!(p.steps.len(), 1);
        assert_eq!(p.steps[0].kind, StepKind::Retrieve);
        assert_eq!(p.batches, vec![vec![0]]);
    }

    #[test]
    fn anchor_is_resolved_first() {
        let p = schedule(&parse("sofa near chair").unwrap(), &Query::default()).unwrap();
        assert_eq!(p.steps.len(), 2);
        assert_eq!(p.steps[0].kind, StepKind::ResolveAnchor);
        assert_eq!(p.steps[0].query.target_text, "chair");
        assert_eq!(p.steps[1].kind, StepKind::Retrieve);
        assert_eq!(p.steps[1].query.target_text, "sofa");
        assert_eq!(p.steps[1].query.anchor_text.as_deref(), Some("chair"));
        assert_eq!(p.steps[1].depends_on, vec![0]);
    }

    #[test]
    fn independent_tasks_share_a_batch() {
        let p = schedule(&parse("sofa and lamp").unwrap(), &Query::default()).unwrap();
        assert_eq!(p.batches, vec![vec![0, 1]]);
        assert!(p.steps.iter().all(|s| s.depends_on.is_empty()));
    }

    proptest! {
        #[test]
        fn plans_respect_anchors_and_time(
            groups in proptest::collection::vec(proptest::collection::vec((0usize..5, proptest::bool::ANY), 1..4), 1..4)
        ) {
            let names = ["sofa", "lamp", "desk", "bed", "tv"];
            let text = groups
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|&(t, a)| if a { format!("{} near chair", names[t]) } else { names[t].to_string() })
                        .collect::<Vec<_>>()
                        .join(" and ")
                })
                .collect::<Vec<_>>()
                .join(" then ");
            let g = parse(&text).unwrap();
            let p = schedule(&g, &Query::default()).unwrap();
            let retrieve_at = |id: TaskId| p.steps.iter().position(|s| s.task_id == id && s.kind == StepKind::Retrieve).unwrap();
            for s in &p.steps {
                for &d in &s.depends_on {
                    prop_assert!(d < s.index);
                    prop_assert!(p.steps[d].batch < s.batch);
                }
                if s.kind == StepKind::ResolveAnchor {
                    prop_assert!(s.index < retrieve_at(s.task_id));
                }
            }
            for &(a, b) in &g.temporal_edges {
                prop_assert!(retrieve_at(a) < retrieve_at(b));
                prop_assert!(p.steps[retrieve_at(a)].batch < p.steps[retrieve_at(b)].batch);
            }
        }
    }
}
