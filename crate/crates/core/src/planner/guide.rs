use std::fmt::Write;

use super::{travel_distance, PlanResult};
use crate::memory::TopologicalMap;

/// What a target is and why it was chosen, for the guide text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GuideEntry {
    pub label: String,
    pub note: Option<String>,
}

/// Human-readable route guide: one marker per stop with its position, the
/// reason it was picked and how to walk there.
///
/// `entries` is indexed like the planned target list.
pub fn render_guide(plan: &PlanResult, map: &TopologicalMap, entries: &[GuideEntry]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Route: {} stop(s), {:.2} m, {} order change(s), objective {:.2}",
        plan.order.len(),
        plan.travel_cost,
        plan.semantic_penalty,
        plan.objective
    );
    if let Some(s) = plan.start {
        let p = map.nodes[s as usize].position;
        let _ = writeln!(out, "Start: node {s} at ({:.2}, {:.2})", p.x, p.y);
    }
    let offset = usize::from(plan.start.is_none());
    for (k, (&target, &node)) in plan.target_order.iter().zip(&plan.order).enumerate() {
        let p = map.nodes[node as usize].position;
        let entry = entries.get(target).cloned().unwrap_or_default();
        let label = if entry.label.is_empty() { format!("target {}", target + 1) } else { entry.label };
        let _ = write!(out, "{}. {label} -> node {node} at ({:.2}, {:.2})", k + 1, p.x, p.y);
        if let Some(note) = entry.note {
            let _ = write!(out, "; {note}");
        }
        // Leg k arrives at stop k when there is a start node, otherwise at
        // stop k+1.
        if k >= offset {
            let leg = &plan.legs[k - offset];
            let hops: Vec<String> = leg.iter().map(|n| n.to_string()).collect();
            let _ = write!(out, "; walk {:.2} m via {}", travel_distance(leg, map), hops.join(" -> "));
        }
        out.push('\n');
    }
    out
}
