//! Relevance and orbit analysis, and exhaustive or family-restricted
//! resilience verification.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forwarding::Pattern;
use crate::graph::{Edge, FailureSet, Graph, NodeId};
use crate::routing::{route_masks, Outcome, RouteTrace};

/// Largest edge count for which all subsets are enumerated.
pub const ALL_SUBSETS_EDGE_LIMIT: usize = 22;
/// Default cap on enumerated failure sets, overridable by `FAILOVER_LAB_BUDGET`.
pub const DEFAULT_BUDGET: usize = 1 << 24;
const CHUNK: usize = 4096;

pub fn budget() -> usize {
    std::env::var("FAILOVER_LAB_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// BFS from `from` to `to` in `g` with the `blocked` nodes removed.
fn reaches(g: &Graph, from: NodeId, to: NodeId, blocked: &[bool]) -> bool {
    if blocked[from] {
        return false;
    }
    let mut seen = blocked.to_vec();
    seen[from] = true;
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        for &u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    false
}

/// Relevant neighbors of `i` when the ports in `mask` are down. Only `i`'s own
/// failures matter: `j` is relevant iff `j` reaches `tgt` in `G` with `i` and
/// all other live neighbors of `i` deleted. Extra nodes in `avoid` are deleted
/// as well.
pub fn relevant_with_mask(g: &Graph, i: NodeId, mask: u64, tgt: NodeId, avoid: &[NodeId]) -> Vec<NodeId> {
    let live: Vec<NodeId> = g.live_neighbors(i, mask).collect();
    let mut blocked = vec![false; g.node_count()];
    blocked[i] = true;
    for &a in avoid {
        blocked[a] = true;
    }
    for &u in &live {
        blocked[u] = true;
    }
    live.iter()
        .copied()
        .filter(|&j| {
            if j == tgt {
                return true;
            }
            if avoid.contains(&j) {
                return false;
            }
            blocked[j] = false;
            let r = reaches(g, j, tgt, &blocked);
            blocked[j] = true;
            r
        })
        .collect()
}

pub fn relevant_neighbors(g: &Graph, f: &FailureSet, i: NodeId, tgt: NodeId) -> Result<Vec<NodeId>> {
    g.check_node(i)?;
    g.check_node(tgt)?;
    if i == tgt {
        return Err(Error::TargetIsSource(i));
    }
    Ok(relevant_with_mask(g, i, g.local_mask(f, i), tgt, &[]))
}

/// Which necessary condition to check at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitVariant {
    /// Relevant neighbors share one orbit (no source matching).
    Target,
    /// Source matching, source not adjacent to `i`, at least two live
    /// neighbors of `i` next to the source: neighbors whose relay path can
    /// avoid the source share one orbit.
    Source,
    /// Source matching, `i` of live degree two with neighbors `a`, `b`:
    /// disjoint paths `s ⇝ a` and `b ⇝ t` avoiding `i` force `a ↦ b`.
    SourceDegree2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitCheck {
    Ok,
    Violation { required: Vec<NodeId>, orbits: Vec<Vec<NodeId>> },
    NotApplicable(String),
}

/// `must_reach` has to appear in the forward iteration of the forwarding map
/// started at in-port `from`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Requirement {
    pub from: NodeId,
    pub must_reach: Vec<NodeId>,
}

/// Whether there are node-disjoint paths `s ⇝ u` avoiding `avoid_p` and
/// `j ⇝ t` avoiding `avoid_q`.
pub fn disjoint_paths(g: &Graph, s: NodeId, u: NodeId, j: NodeId, t: NodeId, avoid_p: &[bool], avoid_q: &[bool]) -> bool {
    if avoid_p[s] || avoid_p[u] || avoid_q[j] || avoid_q[t] {
        return false;
    }
    struct Walk<'a> {
        g: &'a Graph,
        u: NodeId,
        j: NodeId,
        t: NodeId,
        avoid_p: &'a [bool],
        avoid_q: &'a [bool],
        on: Vec<bool>,
    }
    impl Walk<'_> {
        fn dfs(&mut self, v: NodeId) -> bool {
            self.on[v] = true;
            let found = if v == self.u {
                let blocked: Vec<bool> = self.on.iter().zip(self.avoid_q).map(|(a, b)| *a || *b).collect();
                reaches(self.g, self.j, self.t, &blocked)
            } else {
                let g = self.g;
                g.neighbors(v).iter().any(|&x| {
                    !self.on[x] && !self.avoid_p[x] && x != self.j && x != self.t && self.dfs(x)
                })
            };
            self.on[v] = false;
            found
        }
    }
    if [s, u].contains(&j) || [s, u].contains(&t) {
        return false;
    }
    let on = vec![false; g.node_count()];
    Walk { g, u, j, t, avoid_p, avoid_q, on }.dfs(s)
}

/// Whether node-disjoint paths `s ⇝ a` and `b ⇝ t` exist in `G − i`.
pub fn disjoint_relay_paths(g: &Graph, i: NodeId, s: NodeId, a: NodeId, b: NodeId, t: NodeId) -> bool {
    let mut avoid = vec![false; g.node_count()];
    avoid[i] = true;
    disjoint_paths(g, s, a, b, t, &avoid, &avoid)
}

/// Memoized requirement generator for one `(g, tgt)` instance.
#[derive(Debug, Default)]
pub struct OrbitAnalysis {
    target_cache: HashMap<(NodeId, u64), Vec<Requirement>>,
    source_cache: HashMap<(NodeId, u64, NodeId, bool), Vec<Requirement>>,
}

impl OrbitAnalysis {
    pub fn new() -> Self {
        Self::default()
    }

    /// Requirements every perfectly resilient pattern meets at `i` without
    /// source matching: the iteration from each live in-port `u` reaches
    /// every other relevant neighbor.
    pub fn target_requirements(&mut self, g: &Graph, i: NodeId, mask: u64, tgt: NodeId) -> &[Requirement] {
        self.target_cache.entry((i, mask)).or_insert_with(|| {
            if i == tgt {
                return Vec::new();
            }
            let rel = relevant_with_mask(g, i, mask, tgt, &[]);
            g.live_neighbors(i, mask)
                .filter(|&u| u != tgt)
                .map(|u| Requirement { from: u, must_reach: rel.iter().copied().filter(|&j| j != u).collect() })
                .filter(|r| !r.must_reach.is_empty())
                .collect()
        })
    }

    /// Requirements at `i` for packets from `src` under source matching: the
    /// iteration from live in-port `u` reaches live neighbor `j` whenever
    /// node-disjoint paths `src ⇝ u` and `j ⇝ tgt` exist that avoid `i` and
    /// the other live neighbors of `i`. With `direct` only, `src ⇝ u` must be
    /// the single link `(src, u)` or `src = u`.
    pub fn source_requirements(
        &mut self,
        g: &Graph,
        i: NodeId,
        mask: u64,
        tgt: NodeId,
        src: NodeId,
        direct: bool,
    ) -> &[Requirement] {
        self.source_cache.entry((i, mask, src, direct)).or_insert_with(|| {
            if i == tgt || i == src {
                return Vec::new();
            }
            let live: Vec<NodeId> = g.live_neighbors(i, mask).collect();
            let n = g.node_count();
            let avoid_except = |keep: NodeId| {
                let mut a = vec![false; n];
                a[i] = true;
                for &w in &live {
                    a[w] = w != keep;
                }
                a
            };
            let mut out = Vec::new();
            for &u in live.iter().filter(|&&u| u != tgt) {
                if direct && u != src && !g.has_edge(u, src) {
                    continue;
                }
                let mut avoid_p = avoid_except(u);
                if direct && u != src {
                    // only s and u may be used
                    avoid_p = vec![true; n];
                    avoid_p[src] = false;
                    avoid_p[u] = false;
                }
                let must: Vec<NodeId> = live
                    .iter()
                    .copied()
                    .filter(|&j| j != u && disjoint_paths(g, src, u, j, tgt, &avoid_p, &avoid_except(j)))
                    .collect();
                if !must.is_empty() {
                    out.push(Requirement { from: u, must_reach: must });
                }
            }
            out
        })
    }
}

/// Outcome of following a partially known forwarding map from `req.from`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainStatus {
    Satisfied,
    Undecided,
    Violated,
}

/// Follows `step` from `req.from` until every required neighbor is seen, an
/// unknown entry stops the walk, or the iteration closes without them.
pub fn follow_requirement(req: &Requirement, degree: usize, mut step: impl FnMut(NodeId) -> Option<NodeId>) -> ChainStatus {
    let mut seen: Vec<NodeId> = Vec::with_capacity(degree);
    let mut x = req.from;
    for _ in 0..=degree {
        let Some(y) = step(x) else { return ChainStatus::Undecided };
        if seen.contains(&y) {
            break;
        }
        seen.push(y);
        if req.must_reach.iter().all(|j| seen.contains(j)) {
            return ChainStatus::Satisfied;
        }
        x = y;
    }
    ChainStatus::Violated
}

/// Checks a necessary orbit condition of perfect resilience at node `i`.
///
/// Without a source this is the target variant; with a source, the source
/// variant is tried first and the degree-two variant second.
pub fn check_orbit_condition(
    g: &Graph,
    f: &FailureSet,
    p: &Pattern,
    i: NodeId,
    tgt: NodeId,
    src: Option<NodeId>,
) -> Result<OrbitCheck> {
    match src {
        None => check_orbit_variant(g, f, p, i, tgt, None, OrbitVariant::Target),
        Some(_) => {
            let r = check_orbit_variant(g, f, p, i, tgt, src, OrbitVariant::Source)?;
            if matches!(r, OrbitCheck::NotApplicable(_)) {
                check_orbit_variant(g, f, p, i, tgt, src, OrbitVariant::SourceDegree2)
            } else {
                Ok(r)
            }
        }
    }
}

pub fn check_orbit_variant(
    g: &Graph,
    f: &FailureSet,
    p: &Pattern,
    i: NodeId,
    tgt: NodeId,
    src: Option<NodeId>,
    variant: OrbitVariant,
) -> Result<OrbitCheck> {
    g.check_node(i)?;
    g.check_node(tgt)?;
    if i == tgt {
        return Ok(OrbitCheck::NotApplicable("node is the target".into()));
    }
    let mask = g.local_mask(f, i);
    if g.live_neighbors(i, mask).next().is_none() {
        return Ok(OrbitCheck::NotApplicable("node is isolated".into()));
    }
    let orbits = p.orbits(g, i, mask, src)?;
    let same_orbit = |req: &[NodeId]| orbits.iter().any(|o| req.iter().all(|j| o.contains(j)));
    match variant {
        OrbitVariant::Target => {
            let rel = relevant_with_mask(g, i, mask, tgt, &[]);
            if rel.len() < 2 {
                return Ok(OrbitCheck::NotApplicable("fewer than two relevant neighbors".into()));
            }
            Ok(if same_orbit(&rel) { OrbitCheck::Ok } else { OrbitCheck::Violation { required: rel, orbits } })
        }
        OrbitVariant::Source => {
            let Some(s) = src else {
                return Err(Error::Pattern("source variant needs a source".into()));
            };
            g.check_node(s)?;
            if s == i || g.has_edge(s, i) || g.live_neighbors(i, mask).any(|u| u == tgt) {
                return Ok(OrbitCheck::NotApplicable("source variant preconditions not met".into()));
            }
            let rel = relevant_with_mask(g, i, mask, tgt, &[s]);
            let anchors = rel.iter().filter(|&&u| g.has_edge(u, s)).count();
            if anchors < 2 {
                return Ok(OrbitCheck::NotApplicable("source touches fewer than two relevant neighbors".into()));
            }
            Ok(if same_orbit(&rel) { OrbitCheck::Ok } else { OrbitCheck::Violation { required: rel, orbits } })
        }
        OrbitVariant::SourceDegree2 => {
            let Some(s) = src else {
                return Err(Error::Pattern("degree-two variant needs a source".into()));
            };
            g.check_node(s)?;
            let live: Vec<NodeId> = g.live_neighbors(i, mask).collect();
            if live.len() != 2 || s == i || live.contains(&tgt) {
                return Ok(OrbitCheck::NotApplicable("degree-two preconditions not met".into()));
            }
            let (a, b) = (live[0], live[1]);
            let mut applicable = false;
            for (x, y) in [(a, b), (b, a)] {
                if disjoint_relay_paths(g, i, s, x, y, tgt) {
                    applicable = true;
                    if p.eval(g, i, Some(x), mask, src)? != y {
                        return Ok(OrbitCheck::Violation { required: vec![x, y], orbits });
                    }
                }
            }
            Ok(if applicable {
                OrbitCheck::Ok
            } else {
                OrbitCheck::NotApplicable("no disjoint relay paths".into())
            })
        }
    }
}

/// A set of failure sets to verify against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureFamily {
    Explicit(Vec<FailureSet>),
    AllSubsets,
    UpToK(usize),
}

/// Failure sets as bitmasks over the graph's canonical edge order.
pub fn family_masks(g: &Graph, family: &FailureFamily) -> Result<Vec<u64>> {
    let m = g.edge_count();
    let limit = budget();
    match family {
        FailureFamily::Explicit(sets) => {
            if m > 64 {
                return Err(Error::LimitExceeded { what: "edge count", actual: m, limit: 64 });
            }
            sets.iter()
                .map(|f| {
                    f.iter().try_fold(0u64, |acc, e| {
                        g.edge_index(e).map(|k| acc | (1 << k)).ok_or(Error::NotAnEdge(e.0, e.1))
                    })
                })
                .collect()
        }
        FailureFamily::AllSubsets => {
            if m > ALL_SUBSETS_EDGE_LIMIT {
                return Err(Error::LimitExceeded { what: "edge count", actual: m, limit: ALL_SUBSETS_EDGE_LIMIT });
            }
            if (1usize << m) > limit {
                return Err(Error::LimitExceeded { what: "failure sets", actual: 1 << m, limit });
            }
            Ok((0..1u64 << m).collect())
        }
        FailureFamily::UpToK(k) => {
            let k = (*k).min(m);
            if m > 64 {
                return Err(Error::LimitExceeded { what: "edge count", actual: m, limit: 64 });
            }
            let mut total: usize = 0;
            let mut c: usize = 1;
            for j in 0..=k {
                if j > 0 {
                    c = c.saturating_mul(m - j + 1) / j;
                }
                total = total.saturating_add(c);
            }
            if total > limit {
                return Err(Error::LimitExceeded { what: "failure sets", actual: total, limit });
            }
            let mut out = Vec::with_capacity(total);
            for size in 0..=k {
                let mut idx: Vec<usize> = (0..size).collect();
                loop {
                    out.push(idx.iter().fold(0u64, |a, &b| a | (1 << b)));
                    // next combination in lexicographic order
                    let mut p = size;
                    while p > 0 && idx[p - 1] == m - size + p - 1 {
                        p -= 1;
                    }
                    if p == 0 {
                        break;
                    }
                    idx[p - 1] += 1;
                    for q in p..size {
                        idx[q] = idx[q - 1] + 1;
                    }
                }
            }
            Ok(out)
        }
    }
}

pub fn mask_to_failure_set(g: &Graph, mask: u64) -> FailureSet {
    g.edges()
        .iter()
        .enumerate()
        .filter(|(k, _)| mask & (1 << k) != 0)
        .map(|(_, e)| *e)
        .collect()
}

/// Per-node port masks for an edge mask.
pub fn port_masks(g: &Graph, ports: &[(NodeId, u32, NodeId, u32)], mask: u64) -> Vec<u64> {
    let mut masks = vec![0u64; g.node_count()];
    let mut rest = mask;
    while rest != 0 {
        let k = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let (u, pu, v, pv) = ports[k];
        masks[u] |= 1 << pu;
        masks[v] |= 1 << pv;
    }
    masks
}

/// `(u, port of v at u, v, port of u at v)` per edge.
pub fn edge_ports(g: &Graph) -> Vec<(NodeId, u32, NodeId, u32)> {
    g.edges()
        .iter()
        .map(|&Edge(u, v)| (u, g.port(u, v).unwrap() as u32, v, g.port(v, u).unwrap() as u32))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportMode {
    Perfect,
    KResilient(usize),
    Family,
}

impl ReportMode {
    pub fn of(family: &FailureFamily) -> Self {
        match family {
            FailureFamily::AllSubsets => ReportMode::Perfect,
            FailureFamily::UpToK(k) => ReportMode::KResilient(*k),
            FailureFamily::Explicit(_) => ReportMode::Family,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub failures: FailureSet,
    pub source: NodeId,
    pub trace: RouteTrace,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub failure_sets: usize,
    pub traces: usize,
    pub max_hops: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResilienceReport {
    pub mode: ReportMode,
    pub verdict: bool,
    pub counterexample: Option<Counterexample>,
    pub stats: Stats,
}

/// Result of checking one failure set.
struct SetResult {
    failure: Option<(NodeId, RouteTrace)>,
    traces: usize,
    max_hops: usize,
}

fn check_set(g: &Graph, ports: &[(NodeId, u32, NodeId, u32)], p: &Pattern, tgt: NodeId, sources: &[NodeId], mask: u64) -> SetResult {
    let masks = port_masks(g, ports, mask);
    let reach = g.reachable_with_masks(&masks, tgt);
    let mut res = SetResult { failure: None, traces: 0, max_hops: 0 };
    for &s in sources {
        if !reach[s] {
            continue;
        }
        let t = route_masks(g, &masks, &reach, p, s, tgt);
        res.traces += 1;
        res.max_hops = res.max_hops.max(t.hops.len());
        if t.outcome != Outcome::Delivered {
            res.failure = Some((s, t));
            break;
        }
    }
    res
}

/// Checks that every applicable source is delivered under every failure set
/// of the family. Sources are `src` alone, or every node except `tgt`.
/// The reported counterexample is the first in (family order, source order).
pub fn verify(g: &Graph, p: &Pattern, tgt: NodeId, family: &FailureFamily, src: Option<NodeId>) -> Result<ResilienceReport> {
    g.check_node(tgt)?;
    if p.is_source_matching() && src.is_none() {
        return Err(Error::Pattern("a source-matching pattern needs a source".into()));
    }
    let sources: Vec<NodeId> = match src {
        Some(s) => {
            g.check_node(s)?;
            if s == tgt {
                return Err(Error::TargetIsSource(s));
            }
            vec![s]
        }
        None => g.nodes().filter(|&v| v != tgt).collect(),
    };
    let masks = family_masks(g, family)?;
    let ports = edge_ports(g);
    let mut stats = Stats::default();
    for chunk in masks.chunks(CHUNK) {
        let results: Vec<SetResult> =
            chunk.par_iter().map(|&m| check_set(g, &ports, p, tgt, &sources, m)).collect();
        stats.failure_sets += chunk.len();
        for r in &results {
            stats.traces += r.traces;
            stats.max_hops = stats.max_hops.max(r.max_hops);
        }
        if let Some((k, r)) = results.into_iter().enumerate().find(|(_, r)| r.failure.is_some()) {
            let (source, trace) = r.failure.unwrap();
            return Ok(ResilienceReport {
                mode: ReportMode::of(family),
                verdict: false,
                counterexample: Some(Counterexample { failures: mask_to_failure_set(g, chunk[k]), source, trace }),
                stats,
            });
        }
    }
    Ok(ResilienceReport { mode: ReportMode::of(family), verdict: true, counterexample: None, stats })
}
