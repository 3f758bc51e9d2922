//! Deterministic packet simulation with exact loop detection.
//!
//! The simulation state is `(node, in-port)`; a packet starts in
//! `(src, ⊥)`. Revisiting a state proves the packet cycles forever, so every
//! trace has at most `2m + 1` hops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forwarding::{EvalError, Pattern};
use crate::graph::{FailureSet, Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hop {
    pub node: NodeId,
    pub in_port: Option<NodeId>,
    pub out_port: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeadReason {
    Isolated,
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Delivered,
    /// Index of the hop whose state repeats.
    Loop(usize),
    Dead(DeadReason),
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RouteTrace {
    pub source: NodeId,
    pub target: NodeId,
    pub hops: Vec<Hop>,
    pub outcome: Outcome,
}

impl RouteTrace {
    pub fn delivered(&self) -> bool {
        self.outcome == Outcome::Delivered
    }

    /// Nodes in visiting order, ending with the last node reached.
    pub fn node_sequence(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.hops.iter().map(|h| h.node).collect();
        match self.hops.last() {
            Some(h) => out.push(h.out_port),
            None => out.push(self.source),
        }
        out
    }

    /// Where a `Dead` trace stopped.
    pub fn last_node(&self) -> NodeId {
        self.hops.last().map_or(self.source, |h| h.out_port)
    }
}

/// Per-call dart numbering: state `(v, Some(u))` ↦ `offset[v] + port(v,u)`.
struct States {
    offset: Vec<usize>,
    seen: Vec<usize>,
}

impl States {
    fn new(g: &Graph) -> Self {
        let mut offset = Vec::with_capacity(g.node_count() + 1);
        let mut acc = 0;
        for v in g.nodes() {
            offset.push(acc);
            acc += g.degree(v);
        }
        offset.push(acc);
        Self { offset, seen: vec![usize::MAX; acc] }
    }
}

/// Runs the packet from `(src, ⊥)` using `step(v, in_port) → out_port`.
/// Stops at `tgt`, on a repeated state, or on the first evaluation error.
pub fn simulate<F>(g: &Graph, src: NodeId, tgt: NodeId, mut step: F) -> (Vec<Hop>, Outcome)
where
    F: FnMut(NodeId, Option<NodeId>) -> std::result::Result<NodeId, EvalError>,
{
    let mut states = States::new(g);
    let mut hops = Vec::new();
    let (mut v, mut in_port) = (src, None::<NodeId>);
    loop {
        if v == tgt {
            return (hops, Outcome::Delivered);
        }
        if let Some(u) = in_port {
            let id = states.offset[v] + g.port(v, u).expect("arrived over an edge");
            if states.seen[id] != usize::MAX {
                return (hops, Outcome::Loop(states.seen[id]));
            }
            states.seen[id] = hops.len();
        }
        let out = match step(v, in_port) {
            Ok(o) => o,
            Err(EvalError::Isolated { .. }) => return (hops, Outcome::Dead(DeadReason::Isolated)),
            Err(EvalError::Undefined { .. }) => return (hops, Outcome::Dead(DeadReason::Undefined)),
        };
        hops.push(Hop { node: v, in_port, out_port: out });
        in_port = Some(v);
        v = out;
    }
}

fn check_ids(g: &Graph, src: NodeId, tgt: NodeId) -> Result<()> {
    g.check_node(src)?;
    g.check_node(tgt)?;
    if src == tgt {
        return Err(Error::TargetIsSource(src));
    }
    Ok(())
}

/// Mask-based core of [`route`]: `masks` are per-node local failure masks and
/// `reach` marks the nodes connected to `tgt`.
pub fn route_masks(g: &Graph, masks: &[u64], reach: &[bool], p: &Pattern, src: NodeId, tgt: NodeId) -> RouteTrace {
    let sm = p.is_source_matching().then_some(src);
    let (hops, outcome) = if masks[src] & full(g.degree(src)) == full(g.degree(src)) {
        (Vec::new(), Outcome::Dead(DeadReason::Isolated))
    } else if !reach[src] {
        (Vec::new(), Outcome::NotApplicable)
    } else {
        simulate(g, src, tgt, |v, i| p.eval(g, v, i, masks[v], sm))
    };
    RouteTrace { source: src, target: tgt, hops, outcome }
}

fn full(d: usize) -> u64 {
    if d >= 64 {
        u64::MAX
    } else {
        (1u64 << d) - 1
    }
}

/// Simulates one packet from `src` towards `tgt` in `G \ F`.
///
/// An isolated source is `Dead(Isolated)`; a source cut off from `tgt`
/// otherwise is `NotApplicable`.
pub fn route(g: &Graph, f: &FailureSet, p: &Pattern, src: NodeId, tgt: NodeId) -> Result<RouteTrace> {
    check_ids(g, src, tgt)?;
    let masks = g.local_masks(f);
    let reach = g.reachable_with_masks(&masks, tgt);
    Ok(route_masks(g, &masks, &reach, p, src, tgt))
}

/// One trace per node other than `tgt`, ascending. Nodes outside `tgt`'s
/// component of `G \ F` are `NotApplicable`.
pub fn route_all_sources(g: &Graph, f: &FailureSet, p: &Pattern, tgt: NodeId) -> Result<Vec<RouteTrace>> {
    g.check_node(tgt)?;
    if p.is_source_matching() {
        return Err(Error::Pattern("route_all_sources needs a pattern without source matching".into()));
    }
    let masks = g.local_masks(f);
    let reach = g.reachable_with_masks(&masks, tgt);
    Ok(g.nodes()
        .filter(|&v| v != tgt)
        .map(|v| {
            if reach[v] {
                route_masks(g, &masks, &reach, p, v, tgt)
            } else {
                RouteTrace { source: v, target: tgt, hops: Vec::new(), outcome: Outcome::NotApplicable }
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forwarding::{Procedural, SkippingPattern};

    fn forward_path(g: &Graph) -> Pattern {
        let orders: Vec<Vec<NodeId>> = g.nodes().map(|v| g.neighbors(v).iter().rev().copied().collect()).collect();
        let starts: Vec<Option<NodeId>> = orders.iter().map(|o| o.first().copied()).collect();
        Pattern::Skipping(SkippingPattern::from_cycles(g, &orders, &starts).unwrap())
    }

    #[test]
    fn path_delivers_in_two_hops() {
        let g = Graph::path(3);
        let t = route(&g, &FailureSet::empty(), &forward_path(&g), 0, 2).unwrap();
        assert_eq!(t.outcome, Outcome::Delivered);
        assert_eq!(t.hops.len(), 2);
        assert_eq!(t.node_sequence(), vec![0, 1, 2]);
    }

    #[test]
    fn disconnected_and_isolated_sources() {
        let g = Graph::path(3);
        let p = forward_path(&g);
        let cut = FailureSet::from_pairs([(1, 2)]);
        assert_eq!(route(&g, &cut, &p, 0, 2).unwrap().outcome, Outcome::NotApplicable);
        let iso = FailureSet::from_pairs([(0, 1)]);
        assert_eq!(route(&g, &iso, &p, 0, 2).unwrap().outcome, Outcome::Dead(DeadReason::Isolated));
        assert!(route(&g, &iso, &p, 2, 2).is_err());
    }

    #[test]
    fn bounce_loops_are_detected() {
        // 0 probes 1, which bounces; 0 has nothing else to try
        let f = FailureSet::empty();
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let p = Pattern::Procedural(Procedural::TwoHopSource { source: 0, target: 3 });
        let t = route(&g, &f, &p, 0, 3).unwrap();
        assert!(matches!(t.outcome, Outcome::Loop(_)));
        assert!(t.hops.len() <= 2 * g.edge_count() + 2);
    }

    #[test]
    fn star_has_one_applicable_trace() {
        let g = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let p = forward_path(&g);
        let f = FailureSet::from_pairs([(0, 2), (0, 3)]);
        let traces = route_all_sources(&g, &f, &p, 0).unwrap();
        assert_eq!(traces.iter().filter(|t| t.outcome != Outcome::NotApplicable).count(), 1);
    }

    #[test]
    fn four_cycle_single_failures() {
        let g = Graph::cycle(4);
        let rot = g.rotation().unwrap().to_vec();
        let starts: Vec<Option<NodeId>> = rot.iter().map(|o| o.first().copied()).collect();
        let p = Pattern::Skipping(SkippingPattern::from_cycles(&g, &rot, &starts).unwrap());
        for e in g.edges() {
            let f = FailureSet::from_edges([*e]);
            let traces = route_all_sources(&g, &f, &p, 0).unwrap();
            assert_eq!(traces.iter().filter(|t| t.delivered()).count(), 3, "failed {e}");
        }
    }
}
