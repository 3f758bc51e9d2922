//! Undirected simple graphs with optional rotation systems, failure sets, and
//! the structural operations used by the pattern transfers.
//!
//! Node ids are dense integers `0..n`. Ports are identified by neighbor id,
//! and adjacency lists are kept sorted so that a local failure set can be
//! represented as a bitmask over a node's adjacency positions.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// An undirected edge stored with the smaller endpoint first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(pub NodeId, pub NodeId);

impl Edge {
    pub fn new(u: NodeId, v: NodeId) -> Self {
        if u <= v {
            Edge(u, v)
        } else {
            Edge(v, u)
        }
    }

    pub fn touches(&self, v: NodeId) -> bool {
        self.0 == v || self.1 == v
    }

    /// The endpoint opposite to `v`.
    pub fn other(&self, v: NodeId) -> NodeId {
        if self.0 == v {
            self.1
        } else {
            self.0
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

impl FromStr for Edge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .trim()
            .split_once('-')
            .ok_or_else(|| Error::Document(format!("edge `{s}` is not of the form u-v")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<NodeId>()
                .map_err(|_| Error::Document(format!("edge `{s}` has a non-numeric endpoint")))
        };
        Ok(Edge::new(parse(a)?, parse(b)?))
    }
}

/// A set of failed edges. Failed edges are unusable in both directions.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FailureSet {
    edges: BTreeSet<Edge>,
}

impl FailureSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_edges<I: IntoIterator<Item = Edge>>(edges: I) -> Self {
        Self { edges: edges.into_iter().collect() }
    }

    pub fn from_pairs<I: IntoIterator<Item = (NodeId, NodeId)>>(pairs: I) -> Self {
        Self::from_edges(pairs.into_iter().map(|(u, v)| Edge::new(u, v)))
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    pub fn contains_pair(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains(&Edge::new(u, v))
    }

    pub fn insert(&mut self, e: Edge) -> bool {
        self.edges.insert(e)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn union(&self, other: &FailureSet) -> FailureSet {
        Self { edges: self.edges.union(&other.edges).copied().collect() }
    }

    pub fn is_subset(&self, other: &FailureSet) -> bool {
        self.edges.is_subset(&other.edges)
    }
}

impl FromIterator<Edge> for FailureSet {
    fn from_iter<T: IntoIterator<Item = Edge>>(iter: T) -> Self {
        Self::from_edges(iter)
    }
}

impl fmt::Display for FailureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.edges.iter().map(|e| e.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Serialized form of [`Graph`]; loading re-validates every invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRepr {
    pub n: usize,
    pub edges: Vec<(NodeId, NodeId)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<NodeId>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<NodeId>,
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        Self {
            n: g.n,
            edges: g.edges.iter().map(|e| (e.0, e.1)).collect(),
            rotation: g.rotation,
            target: g.target,
            source: g.source,
        }
    }
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        let mut g = Graph::new(r.n, r.edges)?;
        if let Some(rot) = r.rotation {
            g = g.with_rotation(rot)?;
        }
        if let Some(t) = r.target {
            g = g.with_target(t)?;
        }
        if let Some(s) = r.source {
            g = g.with_source(s)?;
        }
        Ok(g)
    }
}

/// An undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GraphRepr", try_from = "GraphRepr")]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<NodeId>>,
    rotation: Option<Vec<Vec<NodeId>>>,
    target: Option<NodeId>,
    source: Option<NodeId>,
    index: HashMap<Edge, usize>,
}

impl Graph {
    pub fn new<I: IntoIterator<Item = (NodeId, NodeId)>>(n: usize, edges: I) -> Result<Self> {
        let mut list = Vec::new();
        let mut seen = BTreeSet::new();
        for (u, v) in edges {
            if u >= n {
                return Err(Error::InvalidNode(u));
            }
            if v >= n {
                return Err(Error::InvalidNode(v));
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            let e = Edge::new(u, v);
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(e));
            }
            list.push(e);
        }
        list.sort();
        let mut adj = vec![Vec::new(); n];
        for e in &list {
            adj[e.0].push(e.1);
            adj[e.1].push(e.0);
        }
        for (v, a) in adj.iter_mut().enumerate() {
            a.sort_unstable();
            if a.len() > 64 {
                return Err(Error::DegreeTooLarge(v));
            }
        }
        let index = list.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        Ok(Self { n, edges: list, adj, rotation: None, target: None, source: None, index })
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self::new(n, edges).expect("complete graph is simple")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least three nodes");
        let g = Self::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is simple");
        let rot = (0..n).map(|i| vec![(i + n - 1) % n, (i + 1) % n]).collect();
        g.with_rotation(rot).expect("cycle rotation is valid")
    }

    pub fn path(n: usize) -> Self {
        let g = Self::new(n, (1..n).map(|i| (i - 1, i))).expect("path is simple");
        let rot = (0..n)
            .map(|i| {
                let mut r = Vec::new();
                if i > 0 {
                    r.push(i - 1);
                }
                if i + 1 < n {
                    r.push(i + 1);
                }
                r
            })
            .collect();
        g.with_rotation(rot).expect("path rotation is valid")
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..a {
            for v in a..a + b {
                edges.push((u, v));
            }
        }
        Self::new(a + b, edges).expect("complete bipartite graph is simple")
    }

    /// Validates and attaches a rotation system (cyclic neighbor order per node).
    pub fn with_rotation(mut self, rotation: Vec<Vec<NodeId>>) -> Result<Self> {
        if rotation.len() != self.n {
            return Err(Error::InvalidRotation {
                node: rotation.len().min(self.n),
                reason: format!("expected {} entries, got {}", self.n, rotation.len()),
            });
        }
        for (v, r) in rotation.iter().enumerate() {
            let mut sorted = r.clone();
            sorted.sort_unstable();
            if sorted != self.adj[v] {
                return Err(Error::InvalidRotation {
                    node: v,
                    reason: "rotation is not a cyclic order of exactly the neighbors".into(),
                });
            }
        }
        self.rotation = Some(rotation);
        Ok(self)
    }

    pub fn without_rotation(mut self) -> Self {
        self.rotation = None;
        self
    }

    pub fn with_target(mut self, t: NodeId) -> Result<Self> {
        if t >= self.n {
            return Err(Error::InvalidNode(t));
        }
        if self.source == Some(t) {
            return Err(Error::TargetIsSource(t));
        }
        self.target = Some(t);
        Ok(self)
    }

    pub fn with_source(mut self, s: NodeId) -> Result<Self> {
        if s >= self.n {
            return Err(Error::InvalidNode(s));
        }
        if self.target == Some(s) {
            return Err(Error::TargetIsSource(s));
        }
        self.source = Some(s);
        Ok(self)
    }

    pub(crate) fn set_endpoints(&mut self, target: Option<NodeId>, source: Option<NodeId>) {
        self.target = target;
        self.source = source;
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.n
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn rotation(&self) -> Option<&[Vec<NodeId>]> {
        self.rotation.as_deref()
    }

    pub fn target(&self) -> Option<NodeId> {
        self.target
    }

    pub fn source(&self) -> Option<NodeId> {
        self.source
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.index.contains_key(&Edge::new(u, v))
    }

    pub fn edge_index(&self, e: Edge) -> Option<usize> {
        self.index.get(&e).copied()
    }

    /// Position of `u` in the sorted adjacency of `v`.
    pub fn port(&self, v: NodeId, u: NodeId) -> Option<usize> {
        self.adj[v].binary_search(&u).ok()
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::InvalidNode(v))
        }
    }

    /// Builds a failure set, checking that every edge belongs to the graph.
    pub fn failure_set<I: IntoIterator<Item = Edge>>(&self, edges: I) -> Result<FailureSet> {
        let f = FailureSet::from_edges(edges);
        for e in f.iter() {
            if !self.index.contains_key(&e) {
                return Err(Error::NotAnEdge(e.0, e.1));
            }
        }
        Ok(f)
    }

    /// `F ∩ E(v)`.
    pub fn local_failures(&self, f: &FailureSet, v: NodeId) -> Result<FailureSet> {
        self.check_node(v)?;
        Ok(self.adj[v]
            .iter()
            .map(|&u| Edge::new(u, v))
            .filter(|e| f.contains(*e))
            .collect())
    }

    /// Bitmask of failed ports of `v`, bit `k` standing for `neighbors(v)[k]`.
    pub fn local_mask(&self, f: &FailureSet, v: NodeId) -> u64 {
        let mut mask = 0u64;
        for (k, &u) in self.adj[v].iter().enumerate() {
            if f.contains(Edge::new(u, v)) {
                mask |= 1 << k;
            }
        }
        mask
    }

    pub fn local_masks(&self, f: &FailureSet) -> Vec<u64> {
        let mut masks = vec![0u64; self.n];
        for e in f.iter() {
            if let (Some(a), Some(b)) = (self.port(e.0, e.1), self.port(e.1, e.0)) {
                masks[e.0] |= 1 << a;
                masks[e.1] |= 1 << b;
            }
        }
        masks
    }

    /// Live neighbors of `v` under a local failure mask.
    pub fn live_neighbors(&self, v: NodeId, mask: u64) -> impl Iterator<Item = NodeId> + '_ {
        self.adj[v]
            .iter()
            .enumerate()
            .filter(move |(k, _)| mask & (1 << k) == 0)
            .map(|(_, &u)| u)
    }

    pub fn mask_to_failures(&self, v: NodeId, mask: u64) -> Vec<NodeId> {
        self.adj[v]
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &u)| u)
            .collect()
    }

    pub fn failures_to_mask(&self, v: NodeId, failed: &[NodeId]) -> Result<u64> {
        let mut mask = 0;
        for &u in failed {
            let k = self.port(v, u).ok_or(Error::NotAnEdge(v, u))?;
            mask |= 1 << k;
        }
        Ok(mask)
    }

    /// Nodes reachable from `start` when the ports flagged in `masks` are down.
    pub fn reachable_with_masks(&self, masks: &[u64], start: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for u in self.live_neighbors(v, masks[v]) {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    pub fn reachable(&self, f: &FailureSet, start: NodeId) -> Vec<bool> {
        self.reachable_with_masks(&self.local_masks(f), start)
    }

    /// Whether `u` and `v` are joined by a path in `G \ F`.
    pub fn connected(&self, f: &FailureSet, u: NodeId, v: NodeId) -> Result<bool> {
        self.check_node(u)?;
        self.check_node(v)?;
        Ok(u == v || self.reachable(f, u)[v])
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.reachable(&FailureSet::empty(), 0).iter().all(|&b| b)
    }

    /// Replaces each edge `(u, v)` by the path `u – uv – vu – v`.
    ///
    /// Edge `k` (in canonical order) contributes node `n + 2k` next to its
    /// smaller endpoint and `n + 2k + 1` next to the larger one. The returned
    /// vector maps each original edge to its middle link.
    pub fn subdivide3(&self) -> (Graph, Vec<Edge>) {
        let n = self.n;
        let mut edges = Vec::with_capacity(3 * self.edges.len());
        let mut middle = Vec::with_capacity(self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            let (a, b) = (n + 2 * k, n + 2 * k + 1);
            edges.push((e.0, a));
            edges.push((a, b));
            edges.push((b, e.1));
            middle.push(Edge::new(a, b));
        }
        let mut h = Graph::new(n + 2 * self.edges.len(), edges).expect("subdivision is simple");
        if let Some(rot) = &self.rotation {
            let mut new_rot = vec![Vec::new(); h.n];
            for (v, r) in rot.iter().enumerate() {
                new_rot[v] = r
                    .iter()
                    .map(|&u| {
                        let k = self.index[&Edge::new(u, v)];
                        if v < u {
                            n + 2 * k
                        } else {
                            n + 2 * k + 1
                        }
                    })
                    .collect();
            }
            for (k, e) in self.edges.iter().enumerate() {
                new_rot[n + 2 * k] = vec![e.0, n + 2 * k + 1];
                new_rot[n + 2 * k + 1] = vec![n + 2 * k, e.1];
            }
            h = h.with_rotation(new_rot).expect("spliced rotation is valid");
        }
        h.target = self.target;
        h.source = self.source;
        (h, middle)
    }

    /// Contracts the edge `(i, j)` into `i`, removing `j`.
    pub fn contract_edge(&self, i: NodeId, j: NodeId) -> Result<Contraction> {
        self.check_node(i)?;
        self.check_node(j)?;
        if !self.has_edge(i, j) {
            return Err(Error::NotAnEdge(i, j));
        }
        let node_map: Vec<Option<NodeId>> = (0..self.n)
            .map(|v| match v.cmp(&j) {
                std::cmp::Ordering::Less => Some(v),
                std::cmp::Ordering::Equal => Some(if i < j { i } else { i - 1 }),
                std::cmp::Ordering::Greater => Some(v - 1),
            })
            .collect();
        let redundant: Vec<Edge> = self.adj[j]
            .iter()
            .filter(|&&r| r != i && self.has_edge(i, r))
            .map(|&r| Edge::new(j, r))
            .collect();
        let mut set = BTreeSet::new();
        for e in &self.edges {
            let (a, b) = (node_map[e.0].unwrap(), node_map[e.1].unwrap());
            if a != b {
                set.insert(Edge::new(a, b));
            }
        }
        let mut g = Graph::new(self.n - 1, set.iter().map(|e| (e.0, e.1)))?;
        if let Some(rot) = &self.rotation {
            let mi = node_map[i].unwrap();
            let mut new_rot = vec![Vec::new(); self.n - 1];
            for v in 0..self.n {
                if v == i || v == j {
                    continue;
                }
                let mut r = Vec::new();
                for &u in &rot[v] {
                    let mu = node_map[u].unwrap();
                    if !r.contains(&mu) {
                        r.push(mu);
                    }
                }
                new_rot[node_map[v].unwrap()] = r;
            }
            // splice j's cyclic order into i's in place of j
            let mut merged = Vec::new();
            for &u in &rot[i] {
                if u == j {
                    let pos = rot[j].iter().position(|&x| x == i).unwrap();
                    let d = rot[j].len();
                    for k in 1..d {
                        let w = rot[j][(pos + k) % d];
                        let mw = node_map[w].unwrap();
                        if !merged.contains(&mw) && !rot[i].contains(&w) {
                            merged.push(mw);
                        }
                    }
                } else {
                    merged.push(node_map[u].unwrap());
                }
            }
            new_rot[mi] = merged;
            // fall back to no rotation if the splice did not yield a valid one
            g = match g.clone().with_rotation(new_rot) {
                Ok(h) => h,
                Err(_) => g,
            };
        }
        let target = self.target.map(|t| node_map[t].unwrap());
        let source = self.source.map(|s| node_map[s].unwrap());
        if target.is_some() && target == source {
            g.set_endpoints(target, None);
        } else {
            g.set_endpoints(target, source);
        }
        Ok(Contraction { graph: g, merged_into: i, removed: j, redundant, node_map })
    }

    /// Removes `drop_edges`, then `drop_nodes` with their incident edges.
    /// Remaining nodes are renumbered densely in increasing order.
    pub fn induced_remove(&self, drop_edges: &[Edge], drop_nodes: &[NodeId]) -> Result<Removal> {
        for e in drop_edges {
            if !self.has_edge(e.0, e.1) {
                return Err(Error::NotAnEdge(e.0, e.1));
            }
        }
        for &v in drop_nodes {
            self.check_node(v)?;
        }
        let dropped: BTreeSet<NodeId> = drop_nodes.iter().copied().collect();
        let dropped_edges: BTreeSet<Edge> = drop_edges.iter().copied().collect();
        let mut node_map = vec![None; self.n];
        let mut next = 0;
        for (v, slot) in node_map.iter_mut().enumerate() {
            if !dropped.contains(&v) {
                *slot = Some(next);
                next += 1;
            }
        }
        let kept: Vec<(NodeId, NodeId)> = self
            .edges
            .iter()
            .filter(|e| !dropped_edges.contains(e))
            .filter_map(|e| Some((node_map[e.0]?, node_map[e.1]?)))
            .collect();
        let mut g = Graph::new(next, kept)?;
        if let Some(rot) = &self.rotation {
            let mut new_rot = vec![Vec::new(); next];
            for v in 0..self.n {
                if let Some(mv) = node_map[v] {
                    new_rot[mv] = rot[v]
                        .iter()
                        .filter(|&&u| !dropped_edges.contains(&Edge::new(u, v)))
                        .filter_map(|&u| node_map[u])
                        .collect();
                }
            }
            g = g.with_rotation(new_rot).expect("restricted rotation is valid");
        }
        g.set_endpoints(
            self.target.and_then(|t| node_map[t]),
            self.source.and_then(|s| node_map[s]),
        );
        Ok(Removal { graph: g, node_map })
    }
}

/// Result of [`Graph::contract_edge`].
#[derive(Debug, Clone)]
pub struct Contraction {
    pub graph: Graph,
    pub merged_into: NodeId,
    pub removed: NodeId,
    /// `R = {(j, r) : r ∈ V(i) ∩ V(j)}` in the original graph's ids.
    pub redundant: Vec<Edge>,
    /// Original id to contracted id; `j` maps to the image of `i`.
    pub node_map: Vec<Option<NodeId>>,
}

/// Result of [`Graph::induced_remove`].
#[derive(Debug, Clone)]
pub struct Removal {
    pub graph: Graph,
    pub node_map: Vec<Option<NodeId>>,
}
