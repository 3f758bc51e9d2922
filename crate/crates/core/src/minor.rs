//! Brute-force minor search, subgraph monomorphism, and isomorphism helpers
//! for small graphs.
//!
//! The minor search contracts edges recursively and tests for a subgraph
//! monomorphism at every level (node and edge deletions are subsumed by the
//! monomorphism). Visited graphs are memoized by an isomorphism-invariant
//! relabelling; equal keys imply isomorphic graphs, so memo hits are exact.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, NodeId};

/// Default node limit for the minor search.
pub const MINOR_SEARCH_LIMIT: usize = 10;

/// Stable colour refinement. Colours are canonical: isomorphic graphs get
/// the same colour multiset and corresponding nodes the same colour.
pub fn refined_colors(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let mut colors: Vec<usize> = g.nodes().map(|v| g.degree(v)).collect();
    let mut classes = colors.iter().collect::<BTreeSet<_>>().len();
    loop {
        let sigs: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<usize> = g.neighbors(v).iter().map(|&u| colors[u]).collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let uniq: Vec<&(usize, Vec<usize>)> = sigs.iter().collect::<BTreeSet<_>>().into_iter().collect();
        let next: Vec<usize> = sigs.iter().map(|s| uniq.binary_search(&s).unwrap()).collect();
        let count = uniq.len();
        colors = next;
        if count == classes {
            return colors;
        }
        classes = count;
    }
}

/// Isomorphism-invariant hash material: sorted colour histogram plus edge
/// colour pairs.
pub fn invariant(g: &Graph) -> (usize, usize, Vec<usize>, Vec<(usize, usize)>) {
    let c = refined_colors(g);
    let mut hist = c.clone();
    hist.sort_unstable();
    let mut ec: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (c[e.0], c[e.1]);
            (a.min(b), a.max(b))
        })
        .collect();
    ec.sort_unstable();
    (g.node_count(), g.edge_count(), hist, ec)
}

/// Adjacency under the ordering (colour, id). Equal keys imply isomorphism.
pub fn relabel_key(g: &Graph) -> Vec<(NodeId, NodeId)> {
    let c = refined_colors(g);
    let mut order: Vec<NodeId> = g.nodes().collect();
    order.sort_by_key(|&v| (c[v], v));
    let mut pos = vec![0; g.node_count()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut key: Vec<(NodeId, NodeId)> = g
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (pos[e.0], pos[e.1]);
            (a.min(b), a.max(b))
        })
        .collect();
    key.push((g.node_count(), usize::MAX));
    key.sort_unstable();
    key
}

/// Exact isomorphism test by colour-respecting backtracking.
pub fn isomorphic(a: &Graph, b: &Graph) -> bool {
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    let (ca, cb) = (refined_colors(a), refined_colors(b));
    let (mut ha, mut hb) = (ca.clone(), cb.clone());
    ha.sort_unstable();
    hb.sort_unstable();
    if ha != hb {
        return false;
    }
    let mut order: Vec<NodeId> = a.nodes().collect();
    order.sort_by_key(|&v| std::cmp::Reverse(a.degree(v)));
    let mut map = vec![usize::MAX; a.node_count()];
    let mut used = vec![false; b.node_count()];
    fn rec(
        k: usize,
        order: &[NodeId],
        a: &Graph,
        b: &Graph,
        ca: &[usize],
        cb: &[usize],
        map: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if k == order.len() {
            return true;
        }
        let v = order[k];
        for w in b.nodes() {
            if used[w] || cb[w] != ca[v] {
                continue;
            }
            let ok = a.neighbors(v).iter().all(|&u| map[u] == usize::MAX || b.has_edge(map[u], w));
            let mapped_nb = a.neighbors(v).iter().filter(|&&u| map[u] != usize::MAX).count();
            let b_nb = b.neighbors(w).iter().filter(|&&x| used[x]).count();
            if !ok || mapped_nb != b_nb {
                continue;
            }
            map[v] = w;
            used[w] = true;
            if rec(k + 1, order, a, b, ca, cb, map, used) {
                return true;
            }
            map[v] = usize::MAX;
            used[w] = false;
        }
        false
    }
    rec(0, &order, a, b, &ca, &cb, &mut map, &mut used)
}

/// Finds an injective map `h → g` preserving edges (not necessarily induced).
pub fn subgraph_monomorphism(h: &Graph, g: &Graph) -> Option<Vec<NodeId>> {
    if h.node_count() > g.node_count() || h.edge_count() > g.edge_count() {
        return None;
    }
    // BFS-ish order: highest degree first, then neighbors of placed nodes
    let mut order: Vec<NodeId> = Vec::new();
    let mut placed = vec![false; h.node_count()];
    while order.len() < h.node_count() {
        let next = h
            .nodes()
            .filter(|&v| !placed[v])
            .max_by_key(|&v| {
                let links = h.neighbors(v).iter().filter(|&&u| placed[u]).count();
                (links, h.degree(v), std::cmp::Reverse(v))
            })
            .unwrap();
        placed[next] = true;
        order.push(next);
    }
    let mut map = vec![usize::MAX; h.node_count()];
    let mut used = vec![false; g.node_count()];
    fn rec(k: usize, order: &[NodeId], h: &Graph, g: &Graph, map: &mut [usize], used: &mut [bool]) -> bool {
        if k == order.len() {
            return true;
        }
        let v = order[k];
        for w in g.nodes() {
            if used[w] || g.degree(w) < h.degree(v) {
                continue;
            }
            if !h.neighbors(v).iter().all(|&u| map[u] == usize::MAX || g.has_edge(map[u], w)) {
                continue;
            }
            map[v] = w;
            used[w] = true;
            if rec(k + 1, order, h, g, map, used) {
                return true;
            }
            map[v] = usize::MAX;
            used[w] = false;
        }
        false
    }
    if rec(0, &order, h, g, &mut map, &mut used) {
        Some(map)
    } else {
        None
    }
}

/// A minor model: for each node of `h`, a connected branch set of `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorModel {
    pub branch_sets: Vec<Vec<NodeId>>,
}

impl MinorModel {
    /// Checks that the branch sets are disjoint, connected, and realise every edge of `h`.
    pub fn is_valid(&self, g: &Graph, h: &Graph) -> bool {
        if self.branch_sets.len() != h.node_count() {
            return false;
        }
        let mut owner = vec![usize::MAX; g.node_count()];
        for (i, set) in self.branch_sets.iter().enumerate() {
            if set.is_empty() {
                return false;
            }
            for &v in set {
                if v >= g.node_count() || owner[v] != usize::MAX {
                    return false;
                }
                owner[v] = i;
            }
            // connectivity inside the branch set
            let mut seen = vec![set[0]];
            let mut stack = vec![set[0]];
            while let Some(v) = stack.pop() {
                for &u in g.neighbors(v) {
                    if owner[u] == i && !seen.contains(&u) {
                        seen.push(u);
                        stack.push(u);
                    }
                }
            }
            if seen.len() != set.len() {
                return false;
            }
        }
        h.edges().iter().all(|e| {
            self.branch_sets[e.0]
                .iter()
                .any(|&a| g.neighbors(a).iter().any(|&b| owner[b] == e.1))
        })
    }
}

pub fn has_minor(g: &Graph, h: &Graph) -> Result<bool> {
    has_minor_with_limit(g, h, MINOR_SEARCH_LIMIT)
}

pub fn has_minor_with_limit(g: &Graph, h: &Graph, limit: usize) -> Result<bool> {
    Ok(find_minor_with_limit(g, h, limit)?.is_some())
}

pub fn find_minor(g: &Graph, h: &Graph) -> Result<Option<MinorModel>> {
    find_minor_with_limit(g, h, MINOR_SEARCH_LIMIT)
}

pub fn find_minor_with_limit(g: &Graph, h: &Graph, limit: usize) -> Result<Option<MinorModel>> {
    if g.node_count() > limit {
        return Err(Error::LimitExceeded { what: "node count", actual: g.node_count(), limit });
    }
    if h.node_count() > g.node_count() {
        return Ok(None);
    }
    let h = h.clone().without_rotation();
    let start = g.clone().without_rotation();
    let bags: Vec<Vec<NodeId>> = g.nodes().map(|v| vec![v]).collect();
    let mut seen = HashSet::new();
    Ok(search(&start, bags, &h, &mut seen))
}

fn search(
    g: &Graph,
    bags: Vec<Vec<NodeId>>,
    h: &Graph,
    seen: &mut HashSet<Vec<(NodeId, NodeId)>>,
) -> Option<MinorModel> {
    if g.node_count() < h.node_count() || g.edge_count() < h.edge_count() {
        return None;
    }
    if !seen.insert(relabel_key(g)) {
        return None;
    }
    if let Some(map) = subgraph_monomorphism(h, g) {
        let mut branch_sets: Vec<Vec<NodeId>> = map.iter().map(|&w| bags[w].clone()).collect();
        for set in &mut branch_sets {
            set.sort_unstable();
        }
        return Some(MinorModel { branch_sets });
    }
    if g.node_count() == h.node_count() {
        return None;
    }
    for e in g.edges().to_vec() {
        let Edge(i, j) = e;
        let c = g.contract_edge(i, j).expect("edge of g");
        let mut next = vec![Vec::new(); c.graph.node_count()];
        for (v, bag) in bags.iter().enumerate() {
            next[c.node_map[v].unwrap()].extend_from_slice(bag);
        }
        if let Some(m) = search(&c.graph, next, h, seen) {
            return Some(m);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minor_examples() {
        assert!(has_minor(&Graph::complete(5), &Graph::complete(4)).unwrap());
        assert!(!has_minor(&Graph::cycle(4), &Graph::complete(4)).unwrap());
        assert!(has_minor(&Graph::cycle(4), &Graph::complete(3)).unwrap());
        assert!(!has_minor(&Graph::path(4), &Graph::complete(3)).unwrap());
        assert!(has_minor(&Graph::complete_bipartite(3, 3), &Graph::complete_bipartite(2, 3)).unwrap());
        assert!(!has_minor(&Graph::complete_bipartite(2, 3), &Graph::complete(4)).unwrap());
    }

    #[test]
    fn limit_is_enforced() {
        let r = has_minor(&Graph::path(11), &Graph::complete(3));
        assert!(matches!(r, Err(Error::LimitExceeded { .. })));
    }

    #[test]
    fn models_are_valid() {
        // Petersen graph has a K5 minor
        let outer: Vec<(usize, usize)> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        let spokes: Vec<(usize, usize)> = (0..5).map(|i| (i, i + 5)).collect();
        let inner: Vec<(usize, usize)> = (0..5).map(|i| (i + 5, (i + 2) % 5 + 5)).collect();
        let g = Graph::new(10, outer.into_iter().chain(spokes).chain(inner)).unwrap();
        let k5 = Graph::complete(5);
        let m = find_minor(&g, &k5).unwrap().expect("Petersen has a K5 minor");
        assert!(m.is_valid(&g, &k5));
    }

    #[test]
    fn isomorphism_detects_relabelings() {
        let a = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let b = Graph::new(4, [(2, 0), (0, 3), (3, 1)]).unwrap();
        let star = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(isomorphic(&a, &b));
        assert!(!isomorphic(&a, &star));
        assert_eq!(invariant(&a), invariant(&b));
    }

    #[test]
    fn monomorphism_finds_cycles() {
        assert!(subgraph_monomorphism(&Graph::cycle(4), &Graph::complete(4)).is_some());
        assert!(subgraph_monomorphism(&Graph::complete(3), &Graph::cycle(4)).is_none());
    }
}
