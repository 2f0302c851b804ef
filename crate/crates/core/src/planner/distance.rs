use crate::memory::TopologicalMap;
use crate::NodeId;

/// Length of a node path in meters. Hops along an edge use its stored
/// distance; hops without one use the Euclidean distance between the node
/// positions.
pub fn travel_distance(path: &[NodeId], map: &TopologicalMap) -> f64 {
    path.windows(2)
        .map(|w| {
            map.edge_weight(w[0], w[1]).unwrap_or_else(|| {
                let (a, b) = (map.nodes[w[0] as usize].position, map.nodes[w[1] as usize].position);
                ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt()
            })
        })
        .sum()
}
