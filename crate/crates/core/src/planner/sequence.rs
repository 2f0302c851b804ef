use std::collections::HashMap;
use std::hash::Hash;

use super::dijkstra::CostMatrix;
use super::PlannerError;

/// Largest target count solved by plain enumeration.
pub const EXACT_LIMIT: usize = 9;

/// Number of pairs ordered differently in `order` and `reference`.
pub fn semantic_penalty<T: Eq + Hash + Copy>(order: &[T], reference: &[T]) -> Result<usize, PlannerError> {
    let rank: HashMap<T, usize> = reference.iter().enumerate().map(|(k, &t)| (t, k)).collect();
    if rank.len() != reference.len() || order.len() != reference.len() {
        return Err(PlannerError::MismatchedSequence);
    }
    let ranks = order
        .iter()
        .map(|t| rank.get(t).copied().ok_or(PlannerError::MismatchedSequence))
        .collect::<Result<Vec<_>, _>>()?;
    let mut seen = vec![false; ranks.len()];
    for &r in &ranks {
        if std::mem::replace(&mut seen[r], true) {
            return Err(PlannerError::MismatchedSequence);
        }
    }
    let mut inversions = 0;
    for i in 0..ranks.len() {
        for j in i + 1..ranks.len() {
            if ranks[i] > ranks[j] {
                inversions += 1;
            }
        }
    }
    Ok(inversions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOptions {
    /// Meters charged per inversion against the semantic sequence.
    pub lambda: f64,
    /// Cost from the agent's position to each target, if it has one.
    pub start_costs: Option<Vec<f64>>,
    /// Hard ordering constraints `(before, after)` over target indices.
    pub precedence: Vec<(usize, usize)>,
}

impl Default for SequenceOptions {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            start_costs: None,
            precedence: Vec::new(),
        }
    }
}

/// Chosen visiting order over target indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SequencePlan {
    pub order: Vec<usize>,
    pub travel_cost: f64,
    pub semantic_penalty: usize,
    pub objective: f64,
}

/// Travel cost of visiting `order`, summed left to right starting from the
/// start leg.
pub fn order_travel(costs: &[Vec<f64>], start_costs: Option<&[f64]>, order: &[usize]) -> f64 {
    let mut t = 0.0;
    if let (Some(s), Some(&first)) = (start_costs, order.first()) {
        t += s[first];
    }
    for w in order.windows(2) {
        t += costs[w[0]][w[1]];
    }
    t
}

struct Search<'a> {
    costs: &'a [Vec<f64>],
    start: Option<&'a [f64]>,
    rank: Vec<usize>,
    lambda: f64,
    /// `before[b]` lists the indices that must precede `b`.
    before: Vec<Vec<usize>>,
    bounded: bool,
    n: usize,
    placed: Vec<bool>,
    prefix: Vec<usize>,
    best: Option<SequencePlan>,
}

impl Search<'_> {
    fn lower_bound(&self, travel: f64, inversions: usize) -> f64 {
        let last = self.prefix.last().copied();
        let open: Vec<usize> = (0..self.n).filter(|&u| !self.placed[u]).collect();
        let mut remaining = 0.0;
        for &u in &open {
            let mut cheapest = f64::INFINITY;
            for &v in open.iter().chain(last.iter()) {
                if v != u {
                    cheapest = cheapest.min(self.costs[v][u]);
                }
            }
            if last.is_none() {
                if let Some(s) = self.start {
                    cheapest = cheapest.min(s[u]);
                }
            }
            if cheapest.is_finite() {
                remaining += cheapest;
            }
        }
        // Each open target will add one inversion per placed target that
        // ranks after it.
        let mut pending = 0;
        for &u in &open {
            pending += self.prefix.iter().filter(|&&p| self.rank[p] > self.rank[u]).count();
        }
        travel + remaining + self.lambda * (inversions + pending) as f64
    }

    fn visit(&mut self, travel: f64, inversions: usize) {
        if self.prefix.len() == self.n {
            let objective = travel + self.lambda * inversions as f64;
            let better = match &self.best {
                None => true,
                Some(b) => objective < b.objective || (objective == b.objective && self.prefix < b.order),
            };
            if better {
                self.best = Some(SequencePlan {
                    order: self.prefix.clone(),
                    travel_cost: travel,
                    semantic_penalty: inversions,
                    objective,
                });
            }
            return;
        }
        if self.bounded && !self.prefix.is_empty() {
            if let Some(b) = &self.best {
                let slack = 1e-9 * b.objective.abs().max(1.0);
                if self.lower_bound(travel, inversions) > b.objective + slack {
                    return;
                }
            }
        }
        for s in 0..self.n {
            if self.placed[s] || self.before[s].iter().any(|&p| !self.placed[p]) {
                continue;
            }
            let step = match (self.prefix.last(), self.start) {
                (Some(&l), _) => self.costs[l][s],
                (None, Some(st)) => st[s],
                (None, None) => 0.0,
            };
            let added = self.prefix.iter().filter(|&&p| self.rank[p] > self.rank[s]).count();
            self.placed[s] = true;
            self.prefix.push(s);
            self.visit(travel + step, inversions + added);
            self.prefix.pop();
            self.placed[s] = false;
        }
    }

    /// Cheap feasible order used to seed pruning: repeatedly take the
    /// nearest admissible target.
    fn greedy(&self) -> Vec<usize> {
        let mut placed = vec![false; self.n];
        let mut order: Vec<usize> = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let pick = (0..self.n)
                .filter(|&s| !placed[s] && self.before[s].iter().all(|&p| placed[p]))
                .min_by(|&a, &b| {
                    let c = |s: usize| match (order.last(), self.start) {
                        (Some(&l), _) => self.costs[l][s],
                        (None, Some(st)) => st[s],
                        (None, None) => 0.0,
                    };
                    c(a).total_cmp(&c(b)).then(a.cmp(&b))
                })
                .expect("precedence was checked to be acyclic");
            placed[pick] = true;
            order.push(pick);
        }
        order
    }
}

fn acyclic(n: usize, before: &[Vec<usize>]) -> bool {
    let mut placed = vec![false; n];
    for _ in 0..n {
        match (0..n).find(|&s| !placed[s] && before[s].iter().all(|&p| placed[p])) {
            Some(s) => placed[s] = true,
            None => return false,
        }
    }
    true
}

/// Finds the visiting order minimizing travel cost plus `lambda` times the
/// inversion count against `semantic_sequence` (a permutation of target
/// indices). Ties go to the lexicographically smallest order.
pub fn plan_sequence(
    costs: &CostMatrix,
    semantic_sequence: &[usize],
    options: &SequenceOptions,
) -> Result<SequencePlan, PlannerError> {
    let n = costs.len();
    if n == 0 {
        return Err(PlannerError::NoTargets);
    }
    if costs.costs.len() != n || costs.costs.iter().any(|r| r.len() != n) {
        return Err(PlannerError::Invalid(format!("cost matrix must be {n}x{n}")));
    }
    if !(options.lambda >= 0.0 && options.lambda.is_finite()) {
        return Err(PlannerError::Invalid(format!("lambda must be finite and >= 0, got {}", options.lambda)));
    }
    let identity: Vec<usize> = (0..n).collect();
    semantic_penalty(&identity, semantic_sequence)?;
    let ids = &costs.target_node_ids;
    for i in 0..n {
        for j in 0..n {
            if i != j && !costs.costs[i][j].is_finite() {
                return Err(PlannerError::Unreachable { from: ids[i], to: ids[j] });
            }
        }
    }
    if let Some(s) = &options.start_costs {
        if s.len() != n {
            return Err(PlannerError::Invalid(format!("expected {n} start costs, got {}", s.len())));
        }
        if let Some(k) = s.iter().position(|c| !c.is_finite()) {
            return Err(PlannerError::UnreachableFromStart(ids[k]));
        }
    }
    let mut before = vec![Vec::new(); n];
    for &(a, b) in &options.precedence {
        if a >= n || b >= n || a == b {
            return Err(PlannerError::Invalid(format!("bad precedence pair ({a}, {b})")));
        }
        before[b].push(a);
    }
    if !acyclic(n, &before) {
        return Err(PlannerError::InfeasiblePrecedence);
    }
    let mut rank = vec![0; n];
    for (k, &s) in semantic_sequence.iter().enumerate() {
        rank[s] = k;
    }
    let mut search = Search {
        costs: &costs.costs,
        start: options.start_costs.as_deref(),
        rank,
        lambda: options.lambda,
        before,
        bounded: n > EXACT_LIMIT,
        n,
        placed: vec![false; n],
        prefix: Vec::with_capacity(n),
        best: None,
    };
    if search.bounded {
        let order = search.greedy();
        let travel = order_travel(search.costs, search.start, &order);
        let inversions = semantic_penalty(&order, semantic_sequence)?;
        search.best = Some(SequencePlan {
            objective: travel + options.lambda * inversions as f64,
            order,
            travel_cost: travel,
            semantic_penalty: inversions,
        });
    }
    search.visit(0.0, 0);
    Ok(search.best.expect("a feasible order exists"))
}
