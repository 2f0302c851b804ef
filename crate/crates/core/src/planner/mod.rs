//! Shortest-path costs, visiting-order optimization and route output.

mod dijkstra;
mod distance;
mod guide;
mod sequence;

pub use dijkstra::{dijkstra, pairwise_costs, path_between, straight_line_costs, CostMatrix};
pub use distance::travel_distance;
pub use guide::{render_guide, GuideEntry};
pub use sequence::{order_travel, plan_sequence, semantic_penalty, SequenceOptions, SequencePlan, EXACT_LIMIT};

use serde::{Deserialize, Serialize};

use crate::memory::TopologicalMap;
use crate::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("node {to} is unreachable from node {from}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("target node {0} is unreachable from the start node")]
    UnreachableFromStart(NodeId),
    #[error("order and semantic sequence must contain the same distinct ids")]
    MismatchedSequence,
    #[error("ordering constraints are cyclic")]
    InfeasiblePrecedence,
    #[error("no targets to plan")]
    NoTargets,
    #[error("{0}")]
    Invalid(String),
}

/// How leg costs are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMetric {
    /// Shortest paths over map edges.
    #[default]
    Graph,
    /// Straight lines between target positions.
    StraightLine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteOptions {
    pub lambda: f64,
    pub start: Option<NodeId>,
    /// `(before, after)` pairs over target indices.
    pub precedence: Vec<(usize, usize)>,
    pub metric: CostMetric,
}

impl Default for RouteOptions {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            start: None,
            precedence: Vec::new(),
            metric: CostMetric::Graph,
        }
    }
}

/// A planned route over target nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// Target node ids in visiting order.
    pub order: Vec<NodeId>,
    /// Indices into the planned target list, in visiting order.
    pub target_order: Vec<usize>,
    /// Node path of each leg; leg k ends where leg k+1 starts.
    pub legs: Vec<Vec<NodeId>>,
    pub travel_cost: f64,
    pub semantic_penalty: usize,
    pub objective: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<NodeId>,
}

impl PlanResult {
    /// Full node path, legs joined without repeating the shared ends.
    pub fn path(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = Vec::new();
        for leg in &self.legs {
            let skip = usize::from(out.last().is_some() && out.last() == leg.first());
            out.extend(&leg[skip..]);
        }
        if out.is_empty() {
            out.extend(self.order.first());
        }
        out
    }
}

fn leg(map: &TopologicalMap, metric: CostMetric, a: NodeId, b: NodeId) -> Result<Vec<NodeId>, PlannerError> {
    match metric {
        CostMetric::Graph => path_between(map, a, b),
        CostMetric::StraightLine if a == b => Ok(vec![a]),
        CostMetric::StraightLine => Ok(vec![a, b]),
    }
}

/// Plans a visit to every node in `targets`. `semantic_sequence` lists
/// target indices in the order the instruction mentions them.
pub fn plan_route(
    map: &TopologicalMap,
    targets: &[NodeId],
    semantic_sequence: &[usize],
    options: &RouteOptions,
) -> Result<PlanResult, PlannerError> {
    let costs = match options.metric {
        CostMetric::Graph => pairwise_costs(map, targets)?,
        CostMetric::StraightLine => straight_line_costs(map, targets)?,
    };
    let start_costs = match options.start {
        None => None,
        Some(s) => {
            let mut with_start = vec![s];
            with_start.extend_from_slice(targets);
            let c = match options.metric {
                CostMetric::Graph => pairwise_costs(map, &with_start)?,
                CostMetric::StraightLine => straight_line_costs(map, &with_start)?,
            };
            Some(c.costs[0][1..].to_vec())
        }
    };
    let seq = plan_sequence(
        &costs,
        semantic_sequence,
        &SequenceOptions {
            lambda: options.lambda,
            start_costs,
            precedence: options.precedence.clone(),
        },
    )?;
    let order: Vec<NodeId> = seq.order.iter().map(|&k| targets[k]).collect();
    let mut stops: Vec<NodeId> = options.start.into_iter().collect();
    stops.extend(&order);
    let legs = stops
        .windows(2)
        .map(|w| leg(map, options.metric, w[0], w[1]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PlanResult {
        order,
        target_order: seq.order,
        legs,
        travel_cost: seq.travel_cost,
        semantic_penalty: seq.semantic_penalty,
        objective: seq.objective,
        lambda: options.lambda,
        start: options.start,
    })
}
