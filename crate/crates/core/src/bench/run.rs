use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::generate::{BenchParams, BenchmarkCase};
use super::BenchError;
use crate::instruction::{parse, Task, TaskGraph, TaskId};
use crate::memory::{MajoritySummarizer, Memory, MemoryParams};
use crate::planner::{plan_route, travel_distance, CostMetric, PlanResult, RouteOptions};
use crate::retrieval::{retrieve, Embedder, Query, SearchMode};
use crate::NodeId;

/// A retrieval pipeline under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Looks up the ground truth.
    Oracle,
    /// Exhaustive similarity scan.
    Flat,
    /// Beam search over the semantic forest.
    Forest,
    /// Anchor validation without neighbor boosting.
    Anchor,
    /// Anchor validation followed by neighbor boosting.
    Full,
    NoForest,
    /// Map edges removed: no anchor neighborhoods, straight-line travel.
    NoTopology,
    /// Anchor stage skipped; context boosting kept.
    NoSpatial,
    /// Boost strength set to zero.
    NoNeighbor,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Oracle,
        Variant::Flat,
        Variant::Forest,
        Variant::Anchor,
        Variant::Full,
        Variant::NoForest,
        Variant::NoTopology,
        Variant::NoSpatial,
        Variant::NoNeighbor,
    ];
    pub const RETRIEVAL: [Variant; 5] = [Variant::Oracle, Variant::Flat, Variant::Forest, Variant::Anchor, Variant::Full];
    pub const ABLATIONS: [Variant; 5] =
        [Variant::Full, Variant::NoForest, Variant::NoTopology, Variant::NoSpatial, Variant::NoNeighbor];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Oracle => "oracle",
            Variant::Flat => "flat",
            Variant::Forest => "forest",
            Variant::Anchor => "anchor",
            Variant::Full => "full",
            Variant::NoForest => "no_forest",
            Variant::NoTopology => "no_topology",
            Variant::NoSpatial => "no_spatial",
            Variant::NoNeighbor => "no_neighbor",
        }
    }

    fn metric(self) -> CostMetric {
        match self {
            Variant::NoTopology => CostMetric::StraightLine,
            _ => CostMetric::Graph,
        }
    }

    /// Query for `task`, or `None` for the oracle.
    pub fn query(self, task: &Task, template: &Query) -> Option<Query> {
        let base = Query {
            target_text: task.target_text.clone(),
            anchor_text: None,
            context_texts: Vec::new(),
            ..template.clone()
        };
        let q = match self {
            Variant::Oracle => return None,
            Variant::Flat | Variant::NoForest => base.with_mode(SearchMode::Flat),
            Variant::Forest | Variant::NoTopology => base.with_mode(SearchMode::Forest),
            Variant::Anchor => match &task.anchor_text {
                Some(a) => base.with_anchor(a.clone()).with_mode(SearchMode::Anchor),
                None => base.with_mode(SearchMode::Forest),
            },
            Variant::Full | Variant::NoNeighbor | Variant::NoSpatial => {
                let mut q = Query {
                    anchor_text: task.anchor_text.clone().filter(|_| self != Variant::NoSpatial),
                    context_texts: task.context_texts.clone(),
                    ..base
                }
                .with_mode(SearchMode::Boosted);
                if self == Variant::NoNeighbor {
                    q.eta = 0.0;
                }
                q
            }
        };
        Some(q)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown config '{s}'")))
    }
}

/// Settings shared by every run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub suite: String,
    pub memory: MemoryParams,
    pub query: Query,
    /// Timing repeats per query; the median is reported.
    pub repeats: usize,
}

impl RunSettings {
    pub fn for_params(params: &BenchParams) -> Self {
        Self {
            suite: "default".into(),
            memory: params.memory_params(),
            query: Query::default(),
            repeats: 5,
        }
    }
}

/// A case with its parsed instruction and built memories.
#[derive(Debug, Clone)]
pub struct PreparedCase<'a> {
    pub case: &'a BenchmarkCase,
    pub graph: TaskGraph,
    pub memory: Memory,
    /// Same nodes and forest, no edges.
    pub bare: Memory,
}

impl<'a> PreparedCase<'a> {
    pub fn new(case: &'a BenchmarkCase, settings: &RunSettings, embedder: &dyn Embedder) -> Result<Self, BenchError> {
        let graph = parse(&case.instruction)?;
        let memory = case.memory(&settings.memory, embedder, &MajoritySummarizer)?;
        let bare = Memory::new(memory.params.clone(), memory.map.without_edges(), memory.forest.clone());
        Ok(Self {
            case,
            graph,
            memory,
            bare,
        })
    }

    fn memory_for(&self, variant: Variant) -> &Memory {
        match variant {
            Variant::NoTopology => &self.bare,
            _ => &self.memory,
        }
    }

    /// Top-1 node and visit count for one task.
    pub fn retrieve_task(
        &self,
        variant: Variant,
        task: &Task,
        template: &Query,
        embedder: &dyn Embedder,
    ) -> Result<(Option<NodeId>, usize), BenchError> {
        match variant.query(task, template) {
            None => Ok((self.case.ground_truth.get(&task.id).copied(), 0)),
            Some(q) => {
                let r = retrieve(self.memory_for(variant), embedder, &q)?;
                Ok((r.top(), r.visited))
            }
        }
    }
}

/// Aggregated metrics of one configuration over one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    pub suite: String,
    pub config: String,
    pub cases: usize,
    pub queries: usize,
    /// Fraction of queries whose top result is the ground truth.
    pub top1_accuracy: f64,
    /// Mean per-query retrieval time, each the median over repeats (ms).
    pub retrieval_time_ms: f64,
    /// Mean nodes scored per query.
    pub nodes_visited: f64,
    /// Fraction of cases where every task reached its ground truth.
    pub success_rate: Option<f64>,
    /// Mean route length over cases that produced a route (m).
    pub travel_distance: Option<f64>,
    /// Mean wall-clock time of parse, retrieve and plan per case (s).
    pub total_task_time_s: Option<f64>,
    /// Mean inversion count of the planned order.
    pub semantic_penalty: Option<f64>,
    pub lambda: Option<f64>,
}

fn median(mut samples: Vec<Duration>) -> Duration {
    samples.sort_unstable();
    samples[samples.len() / 2]
}

fn mean(sum: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn prepare_all<'a>(
    suite: &'a [BenchmarkCase],
    settings: &RunSettings,
    embedder: &dyn Embedder,
) -> Result<Vec<PreparedCase<'a>>, BenchError> {
    if settings.repeats == 0 {
        return Err(BenchError::Config("repeats must be at least 1".into()));
    }
    suite.iter().map(|c| PreparedCase::new(c, settings, embedder)).collect()
}

/// Top-1 accuracy, timing and visit counts per variant.
pub fn run_retrieval_bench(
    suite: &[BenchmarkCase],
    variants: &[Variant],
    settings: &RunSettings,
    embedder: &dyn Embedder,
) -> Result<Vec<MetricsRecord>, BenchError> {
    let prepared = prepare_all(suite, settings, embedder)?;
    let mut records = Vec::new();
    for &variant in variants {
        let (mut queries, mut correct, mut visited, mut millis) = (0, 0, 0usize, 0.0);
        for p in &prepared {
            for task in &p.graph.tasks {
                let mut samples = Vec::with_capacity(settings.repeats);
                let mut outcome = (None, 0);
                for _ in 0..settings.repeats {
                    let t0 = Instant::now();
                    outcome = p.retrieve_task(variant, task, &settings.query, embedder)?;
                    samples.push(t0.elapsed());
                }
                queries += 1;
                correct += usize::from(outcome.0 == p.case.ground_truth.get(&task.id).copied());
                visited += outcome.1;
                millis += median(samples).as_secs_f64() * 1e3;
            }
        }
        records.push(MetricsRecord {
            suite: settings.suite.clone(),
            config: variant.name().into(),
            cases: prepared.len(),
            queries,
            top1_accuracy: mean(correct as f64, queries),
            retrieval_time_ms: mean(millis, queries),
            nodes_visited: mean(visited as f64, queries),
            success_rate: None,
            travel_distance: None,
            total_task_time_s: None,
            semantic_penalty: None,
            lambda: None,
        });
    }
    Ok(records)
}

/// A full pipeline configuration for the navigation bench.
#[derive(Debug, Clone, PartialEq)]
pub struct NavConfig {
    pub label: String,
    pub variant: Variant,
    pub lambda: f64,
}

impl NavConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            label: variant.name().into(),
            variant,
            lambda: 1.0,
        }
    }

    pub fn with_lambda(variant: Variant, lambda: f64) -> Self {
        Self {
            label: format!("{}@lambda={lambda}", variant.name()),
            variant,
            lambda,
        }
    }
}

/// Result of navigating one case.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseOutcome {
    pub success: bool,
    pub plan: Option<PlanResult>,
    pub travel_distance: Option<f64>,
}

/// Plans and walks a route through the retrieved nodes. A task whose
/// retrieval came back empty, or a route that cannot be planned, fails the
/// case.
pub fn navigate_case(
    prepared: &PreparedCase<'_>,
    retrieved: &BTreeMap<TaskId, Option<NodeId>>,
    lambda: f64,
    metric: CostMetric,
) -> CaseOutcome {
    let failed = CaseOutcome {
        success: false,
        plan: None,
        travel_distance: None,
    };
    let order = &prepared.graph.semantic_sequence;
    let Some(targets) = order
        .iter()
        .map(|id| retrieved.get(id).copied().flatten())
        .collect::<Option<Vec<NodeId>>>()
    else {
        return failed;
    };
    let index = |id: TaskId| order.iter().position(|&t| t == id).expect("sequence covers every task");
    let precedence = prepared
        .graph
        .precedence_pairs()
        .into_iter()
        .map(|(a, b)| (index(a), index(b)))
        .collect();
    let map = match metric {
        CostMetric::Graph => &prepared.memory.map,
        CostMetric::StraightLine => &prepared.bare.map,
    };
    let options = RouteOptions {
        lambda,
        start: Some(prepared.case.start_node),
        precedence,
        metric,
    };
    let semantic: Vec<usize> = (0..targets.len()).collect();
    let plan = match plan_route(map, &targets, &semantic, &options) {
        Ok(p) => p,
        Err(e) => {
            log::debug!("case seed {}: planning failed: {e}", prepared.case.seed);
            return failed;
        }
    };
    let walked = travel_distance(&plan.path(), map);
    let success = order
        .iter()
        .all(|id| retrieved.get(id).copied().flatten() == prepared.case.ground_truth.get(id).copied());
    CaseOutcome {
        success,
        plan: Some(plan),
        travel_distance: Some(walked),
    }
}

/// Parse, retrieve, plan and walk every case under each configuration.
pub fn run_navigation_bench(
    suite: &[BenchmarkCase],
    configs: &[NavConfig],
    settings: &RunSettings,
    embedder: &dyn Embedder,
) -> Result<Vec<MetricsRecord>, BenchError> {
    let prepared = prepare_all(suite, settings, embedder)?;
    let mut records = Vec::new();
    for cfg in configs {
        let (mut queries, mut correct, mut visited, mut millis) = (0, 0, 0usize, 0.0);
        let (mut successes, mut routes, mut distance, mut penalty, mut seconds) = (0, 0, 0.0, 0.0, 0.0);
        for p in &prepared {
            let t0 = Instant::now();
            let graph = parse(&p.case.instruction)?;
            let mut retrieved = BTreeMap::new();
            let mut retrieval_time = Duration::ZERO;
            for task in &graph.tasks {
                let t1 = Instant::now();
                let (top, v) = p.retrieve_task(cfg.variant, task, &settings.query, embedder)?;
                retrieval_time += t1.elapsed();
                queries += 1;
                correct += usize::from(top == p.case.ground_truth.get(&task.id).copied());
                visited += v;
                retrieved.insert(task.id, top);
            }
            let outcome = navigate_case(p, &retrieved, cfg.lambda, cfg.variant.metric());
            seconds += t0.elapsed().as_secs_f64();
            millis += retrieval_time.as_secs_f64() * 1e3;
            successes += usize::from(outcome.success);
            if let (Some(plan), Some(d)) = (&outcome.plan, outcome.travel_distance) {
                routes += 1;
                distance += d;
                penalty += plan.semantic_penalty as f64;
            }
        }
        records.push(MetricsRecord {
            suite: settings.suite.clone(),
            config: cfg.label.clone(),
            cases: prepared.len(),
            queries,
            top1_accuracy: mean(correct as f64, queries),
            retrieval_time_ms: mean(millis, queries),
            nodes_visited: mean(visited as f64, queries),
            success_rate: Some(mean(successes as f64, prepared.len())),
            travel_distance: Some(mean(distance, routes)),
            total_task_time_s: Some(mean(seconds, prepared.len())),
            semantic_penalty: Some(mean(penalty, routes)),
            lambda: Some(cfg.lambda),
        });
    }
    Ok(records)
}

/// The full pipeline and each single-module removal, through the
/// navigation bench.
pub fn run_ablations(
    suite: &[BenchmarkCase],
    settings: &RunSettings,
    embedder: &dyn Embedder,
) -> Result<Vec<MetricsRecord>, BenchError> {
    let configs: Vec<NavConfig> = Variant::ABLATIONS.into_iter().map(NavConfig::new).collect();
    run_navigation_bench(suite, &configs, settings, embedder)
}

/// Fails when an oracle record scores below 1.0 accuracy or success.
pub fn check_neutrality(records: &[MetricsRecord]) -> Result<(), BenchError> {
    for r in records.iter().filter(|r| r.config.starts_with(Variant::Oracle.name())) {
        if r.top1_accuracy != 1.0 || r.success_rate.is_some_and(|s| s != 1.0) {
            return Err(BenchError::Neutrality(format!(
                "oracle on suite '{}' scored accuracy {} and success {:?}",
                r.suite, r.top1_accuracy, r.success_rate
            )));
        }
    }
    Ok(())
}
