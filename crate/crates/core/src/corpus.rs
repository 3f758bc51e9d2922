//! Small connected graphs up to isomorphism.
//!
//! Every connected graph with `m ≥ 1` edges arises from one with `m − 1`
//! edges by adding a chord or a pendant node, so level-by-level extension
//! followed by isomorphism reduction is complete.

use std::collections::HashMap;

use crate::graph::Graph;
use crate::minor::{invariant, isomorphic};

type Bucket = (usize, usize, Vec<usize>, Vec<(usize, usize)>);

#[derive(Default)]
struct Pool {
    buckets: HashMap<Bucket, Vec<usize>>,
    graphs: Vec<Graph>,
}

impl Pool {
    fn insert(&mut self, g: Graph) -> bool {
        let key = invariant(&g);
        let slot = self.buckets.entry(key).or_default();
        if slot.iter().any(|&i| isomorphic(&self.graphs[i], &g)) {
            return false;
        }
        slot.push(self.graphs.len());
        self.graphs.push(g);
        true
    }
}

fn extensions(g: &Graph, max_nodes: usize) -> Vec<Graph> {
    let n = g.node_count();
    let base: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.0, e.1)).collect();
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if !g.has_edge(u, v) {
                let mut e = base.clone();
                e.push((u, v));
                out.push(Graph::new(n, e).expect("simple"));
            }
        }
    }
    if n < max_nodes {
        for u in 0..n {
            let mut e = base.clone();
            e.push((u, n));
            out.push(Graph::new(n + 1, e).expect("simple"));
        }
    }
    out
}

fn levels(max_edges: usize, max_nodes: usize) -> Vec<Vec<Graph>> {
    let mut levels = vec![vec![Graph::new(1, []).unwrap()]];
    for _ in 1..=max_edges {
        let mut pool = Pool::default();
        for g in levels.last().unwrap() {
            for h in extensions(g, max_nodes) {
                pool.insert(h);
            }
        }
        levels.push(pool.graphs);
    }
    levels
}

/// Connected graphs with `1 ≤ m ≤ max_edges`, one per isomorphism class,
/// ordered by edge count then discovery.
pub fn connected_graphs_by_edges(max_edges: usize) -> Vec<Graph> {
    levels(max_edges, max_edges + 1).into_iter().skip(1).flatten().collect()
}

/// Connected graphs with `2 ≤ n ≤ max_nodes`, one per isomorphism class,
/// ordered by edge count then discovery.
pub fn connected_graphs_by_nodes(max_nodes: usize) -> Vec<Graph> {
    let max_edges = max_nodes * max_nodes.saturating_sub(1) / 2;
    levels(max_edges, max_nodes).into_iter().skip(1).flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::permute;

    /// Canonical form by trying every relabelling.
    fn brute_canon(g: &Graph) -> Vec<(usize, usize)> {
        let n = g.node_count();
        let mut best: Option<Vec<(usize, usize)>> = None;
        let mut ids: Vec<usize> = (0..n).collect();
        permute(&mut ids, 0, &mut |perm| {
            let mut e: Vec<(usize, usize)> = g
                .edges()
                .iter()
                .map(|x| {
                    let (a, b) = (perm[x.0], perm[x.1]);
                    (a.min(b), a.max(b))
                })
                .collect();
            e.sort_unstable();
            if best.as_ref().is_none_or(|b| e < *b) {
                best = Some(e);
            }
        });
        best.unwrap()
    }

    fn brute_count(n: usize) -> usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let mut seen = std::collections::HashSet::new();
        for bits in 0u32..(1 << pairs.len()) {
            let e: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(k, _)| bits & (1 << k) != 0).map(|(_, p)| *p).collect();
            let g = Graph::new(n, e).unwrap();
            if g.is_connected() {
                seen.insert(brute_canon(&g));
            }
        }
        seen.len()
    }

    #[test]
    fn node_counts_match_brute_force() {
        let all = connected_graphs_by_nodes(5);
        for n in 2..=5 {
            let ours = all.iter().filter(|g| g.node_count() == n).count();
            assert_eq!(ours, brute_count(n), "n={n}");
        }
    }

    #[test]
    fn edge_levels_are_connected_and_distinct() {
        let all = connected_graphs_by_edges(6);
        assert!(all.iter().all(|g| g.is_connected()));
        let canon: std::collections::HashSet<_> =
            all.iter().map(|g| (g.node_count(), brute_canon(g))).collect();
        assert_eq!(canon.len(), all.len());
        // 1, 1, 3, 5, 12, 30 classes for m = 1..6
        let per_m: Vec<usize> = (1..=6).map(|m| all.iter().filter(|g| g.edge_count() == m).count()).collect();
        assert_eq!(per_m, vec![1, 1, 3, 5, 12, 30]);
    }
}
