//! Randomized invariants over small connected graphs.

use failover_lab::constructions::outerplanar_pattern;
use failover_lab::embedding::find_outerplanar_rotation;
use failover_lab::graph::{FailureSet, Graph, NodeId};
use failover_lab::io::{GraphDocument, PatternDocument};
use failover_lab::resilience::{mask_to_failure_set, verify, FailureFamily};
use failover_lab::routing::route;
use failover_lab::synthesis::{replay, synthesize, synthesize_k, Pruning, SynthesisConfig, SynthesisResult};
use failover_lab::transforms::{contract_pattern, path_correspondence_with, TransferStep};
use failover_lab::{Pattern, SkippingPattern};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

/// A connected graph: a random spanning tree plus random extra links.
fn connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (3..=max_n)
        .prop_flat_map(|n| (Just(n), proptest::collection::vec(any::<u32>(), n), any::<u64>()))
        .prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(NodeId, NodeId)> = (1..n).map(|v| (parents[v] as usize % v, v)).collect();
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if extra & (1 << (k % 64)) != 0 && !edges.contains(&(u, v)) {
                        edges.push((u, v));
                    }
                    k += 1;
                }
            }
            Graph::new(n, edges).unwrap()
        })
}

/// A total skipping pattern with shuffled cyclic orders.
fn random_skipping(g: &Graph, seed: u64) -> SkippingPattern {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let orders: Vec<Vec<NodeId>> = g
        .nodes()
        .map(|v| {
            let mut o = g.neighbors(v).to_vec();
            o.shuffle(&mut rng);
            o
        })
        .collect();
    let starts: Vec<Option<NodeId>> = orders.iter().map(|o| o.first().copied()).collect();
    SkippingPattern::from_cycles(g, &orders, &starts).unwrap()
}

fn failure_set(g: &Graph, bits: u64) -> FailureSet {
    mask_to_failure_set(g, bits & ((1u64 << g.edge_count()) - 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_documents_round_trip(g in connected_graph(8)) {
        let text = GraphDocument::new(g.clone()).to_json().unwrap();
        let back = GraphDocument::from_json(&text, false).unwrap();
        prop_assert_eq!(&back.graph, &g);
        prop_assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn pattern_documents_round_trip(g in connected_graph(7), seed in any::<u64>()) {
        let p = Pattern::Skipping(random_skipping(&g, seed));
        let text = PatternDocument::from_pattern(&p, &g).to_json().unwrap();
        let q = PatternDocument::from_json(&text).unwrap().to_pattern(&g).unwrap();
        for v in g.nodes() {
            let d = g.degree(v);
            for mask in 0u64..(1 << d) {
                for inp in std::iter::once(None).chain(g.neighbors(v).iter().copied().map(Some)) {
                    prop_assert_eq!(p.eval(&g, v, inp, mask, None), q.eval(&g, v, inp, mask, None));
                }
            }
        }
    }

    #[test]
    fn traces_terminate_within_bound(g in connected_graph(7), seed in any::<u64>(), bits in any::<u64>(), t in 0usize..7) {
        let t = t % g.node_count();
        let p = Pattern::Skipping(random_skipping(&g, seed));
        let f = failure_set(&g, bits);
        for s in g.nodes().filter(|&s| s != t) {
            let tr = route(&g, &f, &p, s, t).unwrap();
            prop_assert!(tr.hops.len() <= 2 * g.edge_count() + 2);
            if tr.delivered() {
                prop_assert_eq!(tr.last_node(), t);
            }
        }
    }

    #[test]
    fn subdivision_counts(g in connected_graph(8)) {
        let (h, middle) = g.subdivide3();
        prop_assert_eq!(h.node_count(), g.node_count() + 2 * g.edge_count());
        prop_assert_eq!(h.edge_count(), 3 * g.edge_count());
        prop_assert_eq!(middle.len(), g.edge_count());
        for e in middle {
            prop_assert!(e.0 >= g.node_count() && e.1 >= g.node_count() && h.has_edge(e.0, e.1));
        }
    }

    #[test]
    fn outerplanar_routing_delivers_when_connected(g in connected_graph(6), bits in any::<u64>(), t in 0usize..6) {
        let Some(rot) = find_outerplanar_rotation(&g).unwrap() else { return Ok(()) };
        let g = g.with_rotation(rot).unwrap();
        let t = t % g.node_count();
        let p = Pattern::Skipping(outerplanar_pattern(&g, t).unwrap());
        let f = failure_set(&g, bits);
        for s in g.nodes().filter(|&s| s != t) {
            let tr = route(&g, &f, &p, s, t).unwrap();
            prop_assert_eq!(tr.delivered(), g.connected(&f, s, t).unwrap(), "{:?}", tr.outcome);
        }
    }

    #[test]
    fn contraction_walks_correspond(g in connected_graph(6), seed in any::<u64>(), k in any::<usize>(), bits in any::<u64>(), t in 0usize..6) {
        let t = t % g.node_count();
        let e = g.edges()[k % g.edge_count()];
        let a = Pattern::Skipping(random_skipping(&g, seed));
        let after = TransferStep::Contraction { i: e.0, j: e.1 }.apply(&g).unwrap().after;
        let tp = after.nodes().nth(t % after.node_count()).unwrap();
        let a_prime = contract_pattern(&a, &g, e.0, e.1).unwrap().pattern;
        let fp = failure_set(&after, bits);
        for s in after.nodes().filter(|&s| s != tp) {
            prop_assert!(path_correspondence_with(&a, &a_prime, &g, e.0, e.1, &fp, s, tp).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthesized_tables_verify(g in connected_graph(6), t in 0usize..6) {
        let t = t % g.node_count();
        match synthesize_k(&g, t, 1, false).unwrap() {
            SynthesisResult::Found { table, .. } => {
                let r = verify(&g, &Pattern::Table(table), t, &FailureFamily::UpToK(1), None).unwrap();
                prop_assert!(r.verdict);
            }
            other => prop_assert!(false, "one failure not tolerated: {}", other.is_unsat()),
        }
    }

    #[test]
    fn verdicts_are_consistent(g in connected_graph(5), t in 0usize..5) {
        let t = t % g.node_count();
        let cfg = SynthesisConfig::new(FailureFamily::AllSubsets).pruning(Pruning::Orbit);
        match synthesize(&g, t, &cfg).unwrap() {
            SynthesisResult::Found { table, .. } => {
                let r = verify(&g, &Pattern::Table(table), t, &FailureFamily::AllSubsets, None).unwrap();
                prop_assert!(r.verdict);
            }
            SynthesisResult::Unsat(cert) => prop_assert!(replay(&cert).unwrap()),
            SynthesisResult::Inconclusive { .. } => {}
        }
    }
}
