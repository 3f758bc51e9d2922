//! Forwarding functions: explicit tables, skipping patterns, and procedural
//! rules, all evaluated as `(node, in-port, local failures[, source]) → out-port`.
//!
//! Ports are named by the neighbor at the other end. A local failure set is a
//! bitmask over the node's sorted adjacency (bit `k` is `neighbors(v)[k]`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::graph::{FailureSet, Graph, NodeId};

/// Upper bound on the number of table keys `compile_to_table` will emit.
pub const COMPILE_LIMIT: usize = 1 << 22;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvalError {
    #[error("no table entry for node {node}")]
    Undefined { node: NodeId },
    #[error("node {node} has no live incident link")]
    Isolated { node: NodeId },
}

/// `F ∩ E(v)` as a port bitmask of `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalFailures {
    pub node: NodeId,
    pub mask: u64,
}

impl LocalFailures {
    pub fn of(g: &Graph, f: &FailureSet, v: NodeId) -> Result<Self> {
        g.check_node(v)?;
        Ok(Self { node: v, mask: g.local_mask(f, v) })
    }

    pub fn failed(&self, g: &Graph) -> Vec<NodeId> {
        g.mask_to_failures(self.node, self.mask)
    }
}

fn full_mask(d: usize) -> u64 {
    if d == 64 {
        u64::MAX
    } else {
        (1u64 << d) - 1
    }
}

fn is_isolated(g: &Graph, v: NodeId, mask: u64) -> bool {
    mask & full_mask(g.degree(v)) == full_mask(g.degree(v))
}

fn live(g: &Graph, v: NodeId, u: NodeId, mask: u64) -> bool {
    g.port(v, u).is_some_and(|k| mask & (1 << k) == 0)
}

/// Key of a table entry. `src` is present iff the table is source-matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntryKey {
    pub node: NodeId,
    pub mask: u64,
    pub in_port: Option<NodeId>,
    pub src: Option<NodeId>,
}

/// An explicit, possibly partial, forwarding table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatternTable {
    pub source_matching: bool,
    pub entries: BTreeMap<EntryKey, NodeId>,
}

impl PatternTable {
    pub fn new(source_matching: bool) -> Self {
        Self { source_matching, entries: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &EntryKey) -> Option<NodeId> {
        self.entries.get(key).copied()
    }

    /// Inserts an entry after checking it against `g`. Replaces any previous value.
    pub fn insert(&mut self, g: &Graph, key: EntryKey, out: NodeId) -> Result<()> {
        self.check_entry(g, &key, out)?;
        self.entries.insert(key, out);
        Ok(())
    }

    fn check_entry(&self, g: &Graph, key: &EntryKey, out: NodeId) -> Result<()> {
        let v = key.node;
        g.check_node(v)?;
        if key.src.is_some() != self.source_matching {
            return Err(Error::Pattern(format!(
                "entry at node {v} does not match the table's source-matching mode"
            )));
        }
        if let Some(s) = key.src {
            g.check_node(s)?;
        }
        if key.mask & !full_mask(g.degree(v)) != 0 {
            return Err(Error::Pattern(format!("failure mask at node {v} names a non-port")));
        }
        if let Some(u) = key.in_port {
            if !live(g, v, u, key.mask) {
                return Err(Error::Pattern(format!("in-port {u} at node {v} is absent or failed")));
            }
        }
        if !live(g, v, out, key.mask) {
            return Err(Error::Pattern(format!("out-port {out} at node {v} is absent or failed")));
        }
        Ok(())
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        self.entries.iter().try_for_each(|(k, &o)| self.check_entry(g, k, o))
    }

    pub fn eval(&self, g: &Graph, v: NodeId, in_port: Option<NodeId>, mask: u64, src: Option<NodeId>) -> std::result::Result<NodeId, EvalError> {
        if is_isolated(g, v, mask) {
            return Err(EvalError::Isolated { node: v });
        }
        let src = if self.source_matching { src } else { None };
        self.get(&EntryKey { node: v, mask, in_port, src }).ok_or(EvalError::Undefined { node: v })
    }
}

/// Per-node skipping rule over port indices.
#[derive(Debug, Clone, PartialEq, Eq)]
struct SkipNode {
    next: Vec<usize>,
    start: Option<usize>,
    blocked: u64,
}

/// Per node a successor map on ports, a start port for `⊥`, and a set of
/// blocked ports that are skipped like failed ones.
///
/// The out-port is the first element of the in-port's tail (for `⊥`: the
/// start port, then its tail) that is neither failed nor blocked. With no
/// such element the packet bounces back through a live in-port; failing
/// that, the first live port of the tail is used even if blocked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippingPattern {
    nodes: Vec<SkipNode>,
}

impl SkippingPattern {
    /// Builds a pattern from explicit successor maps.
    pub fn from_maps(
        g: &Graph,
        next: &[BTreeMap<NodeId, NodeId>],
        start: &[Option<NodeId>],
        blocked: &[Vec<NodeId>],
    ) -> Result<Self> {
        let n = g.node_count();
        if next.len() != n || start.len() != n || blocked.len() != n {
            return Err(Error::Pattern(format!("skipping pattern needs {n} node entries")));
        }
        let mut nodes = Vec::with_capacity(n);
        for v in g.nodes() {
            let d = g.degree(v);
            let port = |u: NodeId| {
                g.port(v, u).ok_or_else(|| Error::Pattern(format!("{u} is not a neighbor of {v}")))
            };
            if next[v].len() != d {
                return Err(Error::Pattern(format!("successor map at node {v} must cover all {d} ports")));
            }
            let mut succ = vec![usize::MAX; d];
            let mut hit = vec![false; d];
            for (&a, &b) in &next[v] {
                let (pa, pb) = (port(a)?, port(b)?);
                if hit[pb] {
                    return Err(Error::Pattern(format!("successor map at node {v} is not a permutation")));
                }
                hit[pb] = true;
                succ[pa] = pb;
            }
            let start = match start[v] {
                Some(u) => Some(port(u)?),
                None if d == 0 => None,
                None => return Err(Error::Pattern(format!("node {v} needs a start port"))),
            };
            let mut bmask = 0u64;
            for &u in &blocked[v] {
                bmask |= 1 << port(u)?;
            }
            nodes.push(SkipNode { next: succ, start, blocked: bmask });
        }
        Ok(Self { nodes })
    }

    /// Builds a pattern whose successor map at `v` is the cycle `orders[v]`.
    pub fn from_cycles(g: &Graph, orders: &[Vec<NodeId>], start: &[Option<NodeId>]) -> Result<Self> {
        let next: Vec<BTreeMap<NodeId, NodeId>> = orders
            .iter()
            .map(|o| (0..o.len()).map(|k| (o[k], o[(k + 1) % o.len()])).collect())
            .collect();
        let blocked = vec![Vec::new(); g.node_count()];
        Self::from_maps(g, &next, start, &blocked)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn successor(&self, g: &Graph, v: NodeId, u: NodeId) -> Option<NodeId> {
        let k = g.port(v, u)?;
        Some(g.neighbors(v)[self.nodes[v].next[k]])
    }

    pub fn start(&self, g: &Graph, v: NodeId) -> Option<NodeId> {
        self.nodes[v].start.map(|k| g.neighbors(v)[k])
    }

    pub fn blocked(&self, g: &Graph, v: NodeId) -> Vec<NodeId> {
        g.mask_to_failures(v, self.nodes[v].blocked)
    }

    pub fn successor_map(&self, g: &Graph, v: NodeId) -> BTreeMap<NodeId, NodeId> {
        let nb = g.neighbors(v);
        self.nodes[v].next.iter().enumerate().map(|(a, &b)| (nb[a], nb[b])).collect()
    }

    /// Whether the successor map at `v` is a single cycle over all ports.
    pub fn is_cyclic(&self, v: NodeId) -> bool {
        let node = &self.nodes[v];
        let d = node.next.len();
        if d == 0 {
            return true;
        }
        let mut k = node.next[0];
        let mut len = 1;
        while k != 0 {
            k = node.next[k];
            len += 1;
            if len > d {
                return false;
            }
        }
        len == d
    }

    /// Checks that the pattern was built for a graph with `g`'s degrees.
    pub fn fits(&self, g: &Graph) -> bool {
        self.nodes.len() == g.node_count() && g.nodes().all(|v| self.nodes[v].next.len() == g.degree(v))
    }

    pub fn eval(&self, g: &Graph, v: NodeId, in_port: Option<NodeId>, mask: u64) -> std::result::Result<NodeId, EvalError> {
        if is_isolated(g, v, mask) {
            return Err(EvalError::Isolated { node: v });
        }
        let node = &self.nodes[v];
        let d = node.next.len();
        let in_k = match in_port {
            Some(u) => Some(g.port(v, u).ok_or(EvalError::Undefined { node: v })?),
            None => None,
        };
        let first = match in_k {
            Some(k) => node.next[k],
            None => node.start.ok_or(EvalError::Isolated { node: v })?,
        };
        let down = mask | node.blocked;
        let mut k = first;
        for _ in 0..d {
            if down & (1 << k) == 0 {
                return Ok(g.neighbors(v)[k]);
            }
            k = node.next[k];
        }
        if let Some(k) = in_k {
            if mask & (1 << k) == 0 {
                return Ok(g.neighbors(v)[k]);
            }
        }
        let mut k = first;
        for _ in 0..d {
            if mask & (1 << k) == 0 {
                return Ok(g.neighbors(v)[k]);
            }
            k = node.next[k];
        }
        // non-cyclic tail that misses every live port
        Ok(g.live_neighbors(v, mask).next().expect("not isolated"))
    }
}

/// Named rules evaluated on the fly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Procedural {
    /// Forward to `target` when that link is live, else follow `fallback`.
    TargetFirst { target: NodeId, fallback: SkippingPattern },
    /// Source-matching two-hop search: `source` tries its neighbors in turn,
    /// every other node forwards to `target` if possible and bounces otherwise.
    TwoHopSource { source: NodeId, target: NodeId },
    /// Two-hop rule on node ids: target if live, else the lowest live
    /// neighbor if it is below `v`, else cyclic ascending skipping.
    TwoHopId { target: NodeId },
}

impl Procedural {
    pub fn name(&self) -> &'static str {
        match self {
            Procedural::TargetFirst { .. } => "target-first",
            Procedural::TwoHopSource { .. } => "two-hop-source",
            Procedural::TwoHopId { .. } => "two-hop-id",
        }
    }

    pub fn eval(&self, g: &Graph, v: NodeId, in_port: Option<NodeId>, mask: u64, src: Option<NodeId>) -> std::result::Result<NodeId, EvalError> {
        if is_isolated(g, v, mask) {
            return Err(EvalError::Isolated { node: v });
        }
        match self {
            Procedural::TargetFirst { target, fallback } => {
                if live(g, v, *target, mask) {
                    Ok(*target)
                } else {
                    fallback.eval(g, v, in_port, mask)
                }
            }
            Procedural::TwoHopSource { source, target } => {
                if v == *source && src == Some(*source) {
                    Ok(two_hop_source_probe(g, v, *target, in_port, mask))
                } else if live(g, v, *target, mask) {
                    Ok(*target)
                } else if let Some(u) = in_port.filter(|&u| live(g, v, u, mask)) {
                    Ok(u)
                } else {
                    Ok(g.live_neighbors(v, mask).next().expect("not isolated"))
                }
            }
            Procedural::TwoHopId { target } => {
                if live(g, v, *target, mask) {
                    return Ok(*target);
                }
                let lowest = g.live_neighbors(v, mask).next().expect("not isolated");
                if lowest < v {
                    return Ok(lowest);
                }
                match in_port {
                    None => Ok(lowest),
                    Some(u) => Ok(g
                        .live_neighbors(v, mask)
                        .find(|&w| w > u)
                        .unwrap_or(lowest)),
                }
            }
        }
    }
}

/// Probe order at the source: target first, then neighbors ascending.
fn two_hop_source_probe(g: &Graph, v: NodeId, target: NodeId, in_port: Option<NodeId>, mask: u64) -> NodeId {
    let mut order: Vec<NodeId> = Vec::with_capacity(g.degree(v));
    if g.has_edge(v, target) {
        order.push(target);
    }
    order.extend(g.neighbors(v).iter().copied().filter(|&u| u != target));
    let from = in_port.and_then(|u| order.iter().position(|&w| w == u));
    let d = order.len();
    let begin = from.map_or(0, |p| p + 1);
    (0..d)
        .map(|k| order[(begin + k) % d])
        .find(|&u| live(g, v, u, mask))
        .expect("not isolated")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Table(PatternTable),
    Skipping(SkippingPattern),
    Procedural(Procedural),
}

impl Pattern {
    pub fn is_source_matching(&self) -> bool {
        match self {
            Pattern::Table(t) => t.source_matching,
            Pattern::Skipping(_) => false,
            Pattern::Procedural(p) => matches!(p, Procedural::TwoHopSource { .. }),
        }
    }

    /// Evaluates the rule at `v` for a packet that entered through `in_port`
    /// (`None` for `⊥`) while the ports in `mask` are down.
    pub fn eval(&self, g: &Graph, v: NodeId, in_port: Option<NodeId>, mask: u64, src: Option<NodeId>) -> std::result::Result<NodeId, EvalError> {
        match self {
            Pattern::Table(t) => t.eval(g, v, in_port, mask, src),
            Pattern::Skipping(s) => s.eval(g, v, in_port, mask),
            Pattern::Procedural(p) => p.eval(g, v, in_port, mask, src),
        }
    }

    /// [`Pattern::eval`] with the local failures given as a set.
    pub fn eval_local(&self, g: &Graph, v: NodeId, in_port: Option<NodeId>, local_f: &FailureSet, src: Option<NodeId>) -> Result<NodeId> {
        let mask = g.local_mask(&g.local_failures(local_f, v)?, v);
        Ok(self.eval(g, v, in_port, mask, src)?)
    }

    pub fn orbits(&self, g: &Graph, v: NodeId, mask: u64, src: Option<NodeId>) -> std::result::Result<Vec<Vec<NodeId>>, EvalError> {
        let live: Vec<NodeId> = g.live_neighbors(v, mask).collect();
        let map = live
            .iter()
            .map(|&u| self.eval(g, v, Some(u), mask, src))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(orbits_of_map(&live, &map))
    }
}

/// Orbits of the self-map `live[k] ↦ image[k]`: each cycle forms one orbit,
/// every node off a cycle is a singleton. Orbits are sorted, and listed by
/// their smallest element.
pub fn orbits_of_map(live: &[NodeId], image: &[NodeId]) -> Vec<Vec<NodeId>> {
    let idx = |u: NodeId| live.iter().position(|&x| x == u).expect("image is a live port");
    let succ: Vec<usize> = image.iter().map(|&u| idx(u)).collect();
    let d = live.len();
    let mut on_cycle = vec![false; d];
    for k in 0..d {
        let mut x = k;
        for _ in 0..d {
            x = succ[x];
        }
        // after d steps x is on a cycle
        on_cycle[x] = true;
    }
    let mut group = vec![usize::MAX; d];
    let mut out: Vec<Vec<NodeId>> = Vec::new();
    for k in 0..d {
        if group[k] != usize::MAX {
            continue;
        }
        let id = out.len();
        if on_cycle[k] {
            let mut members = Vec::new();
            let mut x = k;
            loop {
                group[x] = id;
                members.push(live[x]);
                x = succ[x];
                if x == k {
                    break;
                }
            }
            members.sort_unstable();
            out.push(members);
        } else {
            group[k] = id;
            out.push(vec![live[k]]);
        }
    }
    out.sort();
    out
}

/// Fills a table over every key of `g`: every node, every non-isolating
/// local failure mask, in-port `⊥` or a live neighbor, and (source-matching
/// only) every source, with `⊥` only at the source itself. Keys for which
/// `rule` yields `None` stay undefined.
pub fn tabulate(
    g: &Graph,
    source_matching: bool,
    mut rule: impl FnMut(&EntryKey) -> Result<Option<NodeId>>,
) -> Result<PatternTable> {
    let sm = source_matching;
    let n = g.node_count();
    let mut keys: usize = 0;
    for v in g.nodes() {
        let d = g.degree(v);
        if d > 20 {
            return Err(Error::LimitExceeded { what: "degree for table compilation", actual: d, limit: 20 });
        }
        keys = keys.saturating_add((1usize << d) * (d + 1) * if sm { n } else { 1 });
    }
    if keys > COMPILE_LIMIT {
        return Err(Error::LimitExceeded { what: "table keys", actual: keys, limit: COMPILE_LIMIT });
    }
    let mut table = PatternTable::new(sm);
    for v in g.nodes() {
        let d = g.degree(v);
        for mask in 0..(1u64 << d) {
            if d == 0 || mask == full_mask(d) {
                continue;
            }
            let ins: Vec<Option<NodeId>> =
                std::iter::once(None).chain(g.live_neighbors(v, mask).map(Some)).collect();
            let srcs: Vec<Option<NodeId>> = if sm { g.nodes().map(Some).collect() } else { vec![None] };
            for &in_port in &ins {
                for &src in &srcs {
                    if sm && in_port.is_none() && src != Some(v) {
                        continue;
                    }
                    let key = EntryKey { node: v, mask, in_port, src };
                    if let Some(out) = rule(&key)? {
                        table.insert(g, key, out)?;
                    }
                }
            }
        }
    }
    Ok(table)
}

/// Expands `p` into a total table over every key of `g` (see [`tabulate`]).
pub fn compile_to_table(p: &Pattern, g: &Graph) -> Result<PatternTable> {
    tabulate(g, p.is_source_matching(), |k| Ok(Some(p.eval(g, k.node, k.in_port, k.mask, k.src)?)))
}
