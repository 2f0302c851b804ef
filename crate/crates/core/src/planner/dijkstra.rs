use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::PlannerError;
use crate::memory::TopologicalMap;
use crate::NodeId;

/// Shortest-path costs between target nodes, `f64::INFINITY` where no path
/// exists.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub target_node_ids: Vec<NodeId>,
    pub costs: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn len(&self) -> usize {
        self.target_node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target_node_ids.is_empty()
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, then node id.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest distances over an adjacency list.
pub fn dijkstra(adj: &[Vec<(NodeId, f64)>], source: NodeId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: source as usize,
    });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(Entry { dist: nd, node: v as usize });
            }
        }
    }
    dist
}

fn check(map: &TopologicalMap, id: NodeId) -> Result<(), PlannerError> {
    if (id as usize) < map.len() {
        Ok(())
    } else {
        Err(PlannerError::UnknownNode(id))
    }
}

/// Graph distances between every pair of `targets`.
pub fn pairwise_costs(map: &TopologicalMap, targets: &[NodeId]) -> Result<CostMatrix, PlannerError> {
    for &t in targets {
        check(map, t)?;
    }
    let adj = map.adjacency();
    let mut rows: Vec<Vec<f64>> = targets
        .iter()
        .map(|&s| {
            let d = dijkstra(&adj, s);
            targets.iter().map(|&t| d[t as usize]).collect()
        })
        .collect();
    // Summation order differs per source; mirror the upper triangle so the
    // matrix is exactly symmetric.
    for i in 0..rows.len() {
        for j in 0..i {
            rows[i][j] = rows[j][i];
        }
    }
    Ok(CostMatrix {
        target_node_ids: targets.to_vec(),
        costs: rows,
    })
}

/// Euclidean distances between every pair of `targets`, ignoring edges.
pub fn straight_line_costs(map: &TopologicalMap, targets: &[NodeId]) -> Result<CostMatrix, PlannerError> {
    for &t in targets {
        check(map, t)?;
    }
    let pos = |id: NodeId| map.nodes[id as usize].position;
    let costs = targets
        .iter()
        .map(|&a| targets.iter().map(|&b| pos(a).distance(&pos(b))).collect())
        .collect();
    Ok(CostMatrix {
        target_node_ids: targets.to_vec(),
        costs,
    })
}

/// A shortest path from `a` to `b`. Among equally short paths the one with
/// the lexicographically smallest node sequence is returned.
pub fn path_between(map: &TopologicalMap, a: NodeId, b: NodeId) -> Result<Vec<NodeId>, PlannerError> {
    check(map, a)?;
    check(map, b)?;
    let adj = map.adjacency();
    let to_b = dijkstra(&adj, b);
    if !to_b[a as usize].is_finite() {
        return Err(PlannerError::Unreachable { from: a, to: b });
    }
    let mut path = vec![a];
    let mut u = a;
    while u != b {
        let here = to_b[u as usize];
        let tol = 1e-9 * here.max(1.0);
        // Adjacency lists are sorted by id, so the first fit is the smallest.
        let next = adj[u as usize]
            .iter()
            .find(|&&(v, w)| to_b[v as usize] < here && (to_b[v as usize] + w - here).abs() <= tol)
            .map(|&(v, _)| v)
            .expect("a finite distance always has a predecessor on a shortest path");
        path.push(next);
        u = next;
    }
    Ok(path)
}
