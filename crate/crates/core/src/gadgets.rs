//! Counterexample graphs with documented node layouts and the adversarial
//! failure families that defeat every forwarding pattern on them.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::permute;
use crate::error::{Error, Result};
use crate::forwarding::{EntryKey, Pattern, PatternTable};
use crate::graph::{FailureSet, Graph, NodeId};
use crate::minor::has_minor;
use crate::resilience::FailureFamily;
use crate::synthesis::{synthesize, Certificate, Pruning, SearchStats, SynthesisConfig, SynthesisResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetSpec {
    pub name: String,
    pub params: BTreeMap<String, usize>,
    /// One line per node group, e.g. `"0..=3: level-one nodes 1..4"`.
    pub layout: Vec<String>,
    pub nodes: usize,
    pub edges: usize,
}

/// A gadget graph (with target, and source when it has one) plus its named
/// failure families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gadget {
    pub spec: GadgetSpec,
    pub graph: Graph,
    pub families: BTreeMap<String, Vec<FailureSet>>,
}

impl Gadget {
    fn new(name: &str, params: &[(&str, usize)], layout: &[&str], graph: Graph) -> Self {
        let spec = GadgetSpec {
            name: name.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            layout: layout.iter().map(|s| s.to_string()).collect(),
            nodes: graph.node_count(),
            edges: graph.edge_count(),
        };
        Self { spec, graph, families: BTreeMap::new() }
    }

    fn family(mut self, name: &str, sets: Vec<FailureSet>) -> Self {
        self.families.insert(name.into(), dedup(sets));
        self
    }

    pub fn target(&self) -> NodeId {
        self.graph.target().expect("gadgets carry a target")
    }

    pub fn named_family(&self, name: &str) -> Result<FailureFamily> {
        self.families
            .get(name)
            .map(|s| FailureFamily::Explicit(s.clone()))
            .ok_or_else(|| Error::Document(format!("gadget {} has no family {name}", self.spec.name)))
    }

    pub fn matches_spec(&self) -> bool {
        self.graph.node_count() == self.spec.nodes && self.graph.edge_count() == self.spec.edges
    }
}

fn dedup(sets: Vec<FailureSet>) -> Vec<FailureSet> {
    let mut out: Vec<FailureSet> = Vec::with_capacity(sets.len());
    for f in sets {
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out
}

fn permutations(items: &[NodeId]) -> Vec<Vec<NodeId>> {
    let mut out = Vec::new();
    permute(&mut items.to_vec(), 0, &mut |p| out.push(p.to_vec()));
    out
}

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] =
    &["k4", "w5", "k5", "k33", "feigenbaum13", "padded", "replicated", "relevance-fig", "counter-fig", "planar7"];

/// Looks up a gadget by its CLI name; `k` is the padding length and `r` the
/// number of copies where they apply.
pub fn by_name(name: &str, k: usize, r: usize) -> Result<Gadget> {
    Ok(match name {
        "k4" => k4(),
        "w5" => w5(),
        "k5" => k5(),
        "k33" => k33(),
        "feigenbaum13" => feigenbaum13(),
        "padded" => padded_gk(k),
        "replicated" => replicated(r, k)?,
        "relevance-fig" => relevance_fig(),
        "counter-fig" => counter_fig(),
        "planar7" => planar7(),
        _ => return Err(Error::Document(format!("unknown gadget {name}; expected one of {}", NAMES.join(", ")))),
    })
}

/// K4 with a planar rotation, target 3.
pub fn k4() -> Gadget {
    let g = Graph::complete(4)
        .with_rotation(vec![vec![1, 3, 2], vec![0, 2, 3], vec![0, 3, 1], vec![0, 1, 2]])
        .and_then(|g| g.with_target(3))
        .expect("valid K4");
    Gadget::new("k4", &[], &["0..=3: K4, target 3"], g)
}

/// Wheel with hub 0 and rim 1..=5 in cyclic order, target 1.
pub fn w5() -> Gadget {
    let mut edges = Vec::new();
    for i in 1..=5 {
        edges.push((0, i));
        edges.push((i, i % 5 + 1));
    }
    let mut rot = vec![(1..=5).collect::<Vec<_>>()];
    for i in 1..=5 {
        let prev = if i == 1 { 5 } else { i - 1 };
        rot.push(vec![i % 5 + 1, 0, prev]);
    }
    let g = Graph::new(6, edges)
        .and_then(|g| g.with_rotation(rot))
        .and_then(|g| g.with_target(1))
        .expect("valid wheel");
    Gadget::new("w5", &[], &["0: hub", "1..=5: rim in cyclic order, target 1"], g)
}

/// K5 with `v1..v5 = 0..4` and target `v5`.
///
/// Family `nok5`: `{(v1,t)}` plus, for every assignment of the roles
/// `v2, v3, v4` to nodes `1..=3`, the set failing `(v1,t)`, `(v2,t)`,
/// `(v3,t)`, `(v2,v4)`, `(v3,v4)`.
pub fn k5() -> Gadget {
    let g = Graph::complete(5).with_target(4).expect("valid K5");
    let mut fam = vec![FailureSet::from_pairs([(0, 4)])];
    for p in permutations(&[1, 2, 3]) {
        let (v2, v3, v4) = (p[0], p[1], p[2]);
        fam.push(FailureSet::from_pairs([(0, 4), (v2, 4), (v3, 4), (v2, v4), (v3, v4)]));
    }
    Gadget::new("k5", &[], &["0..=4: v1..v5, target v5"], g).family("nok5", fam)
}

/// K3,3 with parts `{a, b, c} = {0, 1, 2}` and `{v1, v2, v3} = {3, 4, 5}`;
/// target `c`, start `a`.
///
/// Family `nok3`: `∅` plus `{(t,v1), (t,v2), (b,v3)}` for every assignment
/// of the roles `v1..v3`.
pub fn k33() -> Gadget {
    let g = Graph::complete_bipartite(3, 3).with_target(2).and_then(|g| g.with_source(0)).expect("valid K33");
    let mut fam = vec![FailureSet::empty()];
    for p in permutations(&[3, 4, 5]) {
        fam.push(FailureSet::from_pairs([(2, p[0]), (2, p[1]), (1, p[2])]));
    }
    Gadget::new("k33", &[], &["0, 1, 2: a, b, c (c is the target)", "3, 4, 5: v1, v2, v3"], g).family("nok3", fam)
}

/// Node ids of one Feigenbaum block.
#[derive(Debug, Clone, Copy)]
struct Block {
    /// Level-one nodes 1..4.
    ones: [NodeId; 4],
    c: NodeId,
    /// Pair nodes 12, 13, 14, 23, 24, 34.
    pairs: [NodeId; 6],
    t: NodeId,
    /// The node adjacent to all level-one nodes.
    s: NodeId,
}

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl Block {
    fn at(base: NodeId, s: NodeId) -> Self {
        let ones = [base, base + 1, base + 2, base + 3];
        let pairs = [base + 5, base + 6, base + 7, base + 8, base + 9, base + 10];
        Self { ones, c: base + 4, pairs, t: base + 11, s }
    }

    fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut e = Vec::new();
        for &i in &self.ones {
            e.push((i, self.c));
        }
        for (k, &(a, b)) in PAIRS.iter().enumerate() {
            e.push((self.pairs[k], self.ones[a]));
            e.push((self.pairs[k], self.ones[b]));
        }
        for &p in &self.pairs {
            e.push((p, self.t));
        }
        for &i in &self.ones {
            e.push((self.s, i));
        }
        e
    }

    /// Pair node of level-one roles `a` and `b` (indices into `ones`).
    fn pair(&self, a: usize, b: usize) -> NodeId {
        let key = (a.min(b), a.max(b));
        self.pairs[PAIRS.iter().position(|&p| p == key).expect("distinct roles")]
    }

    /// Links from level-one role `a` to its pair nodes.
    fn upper(&self, a: usize) -> Vec<(NodeId, NodeId)> {
        (0..4).filter(|&b| b != a).map(|b| (self.ones[a], self.pair(a, b))).collect()
    }

    /// Fails every `s` link except the one to role `keep`.
    fn s_only(&self, keep: usize) -> Vec<(NodeId, NodeId)> {
        (0..4).filter(|&b| b != keep).map(|b| (self.s, self.ones[b])).collect()
    }

    /// Loop-forcing sets, one per case of the centre's map, over every
    /// assignment of roles 1..4 to the level-one nodes.
    fn loop_families(&self) -> BTreeMap<&'static str, Vec<FailureSet>> {
        let mut fixed = Vec::new();
        let mut chain = Vec::new();
        let mut c4_to_1 = Vec::new();
        let mut c4_to_23 = Vec::new();
        for r in permutations(&[0, 1, 2, 3]) {
            let (r1, r2, r3, r4) = (r[0], r[1], r[2], r[3]);
            // centre maps 1 to itself: 1 only reaches s and c
            let mut f = self.s_only(r1);
            f.extend(self.upper(r1));
            fixed.push(FailureSet::from_pairs(f));
            // centre cycles within {1, 2} or {1, 2, 3}: those only reach c
            for len in [2, 3] {
                let mut f = self.s_only(r1);
                for &x in &r[..len] {
                    f.extend(self.upper(x));
                }
                chain.push(FailureSet::from_pairs(f));
            }
            // centre maps 4 to 1: loop s, 4, c, 1, 13, 3, c, 4
            let p13 = self.pair(r1, r3);
            let mut f = self.s_only(r4);
            f.extend(self.upper(r4));
            f.extend(self.upper(r1).into_iter().filter(|e| e.1 != p13));
            f.extend(self.upper(r3).into_iter().filter(|e| e.1 != p13));
            f.push((p13, self.t));
            c4_to_1.push(FailureSet::from_pairs(f));
            // centre maps 4 to 2 or 3: only 1 keeps a way up
            let mut f = self.s_only(r4);
            f.extend(self.upper(r4));
            f.extend(self.upper(r2));
            f.extend(self.upper(r3));
            c4_to_23.push(FailureSet::from_pairs(f));
        }
        let all: Vec<FailureSet> =
            fixed.iter().chain(&chain).chain(&c4_to_1).chain(&c4_to_23).cloned().collect();
        BTreeMap::from([
            ("centre-fixed", dedup(fixed)),
            ("centre-chain", dedup(chain)),
            ("centre-4-to-1", dedup(c4_to_1)),
            ("centre-4-to-2-or-3", dedup(c4_to_23)),
            ("loops", dedup(all)),
        ])
    }
}

const FEIGENBAUM_LAYOUT: &[&str] = &[
    "0..=3: level-one nodes 1, 2, 3, 4",
    "4: centre c",
    "5..=10: pair nodes 12, 13, 14, 23, 24, 34",
    "11: target t",
    "12: source s",
];

fn with_block_families(mut g: Gadget, b: &Block) -> Gadget {
    for (name, sets) in b.loop_families() {
        g = g.family(name, sets);
    }
    g
}

/// The 13-node gadget: level-one nodes, a centre, one node per pair of
/// level-one nodes linked to both and to the target, and a source linked to
/// every level-one node.
pub fn feigenbaum13() -> Gadget {
    let b = Block::at(0, 12);
    let g = Graph::new(13, b.edges()).and_then(|g| g.with_target(11)).and_then(|g| g.with_source(12)).expect("valid");
    with_block_families(Gadget::new("feigenbaum13", &[], FEIGENBAUM_LAYOUT, g), &b)
}

/// Node id of the centre in [`feigenbaum13`] and padded variants.
pub const FEIGENBAUM_CENTRE: NodeId = 4;

/// [`feigenbaum13`] with the source replaced by a path `s0 … sk`; `sk = 12`
/// keeps the old source's links and `s0 = 12 + k` is the source.
pub fn padded_gk(k: usize) -> Gadget {
    let b = Block::at(0, 12);
    let mut e = b.edges();
    for j in 0..k {
        e.push((12 + j, 13 + j));
    }
    let g = Graph::new(13 + k, e)
        .and_then(|g| g.with_target(11))
        .and_then(|g| g.with_source(12 + k))
        .expect("valid");
    let path = format!("12..={}: path s{k} … s0, source s0 = {}", 12 + k, 12 + k);
    let mut layout: Vec<&str> = FEIGENBAUM_LAYOUT[..4].to_vec();
    layout.push(&path);
    with_block_families(Gadget::new("padded", &[("k", k)], &layout, g), &b)
}

/// `r` copies of [`padded_gk`]`(pad)` sharing the source `s0 = 0`; copy `c`
/// occupies ids `1 + c·(12 + pad) ..`, with its path `sk … s1` after its
/// block, and a global target (the last id) is linked to every copy's old
/// target.
///
/// Family `loops` fails one loop-forcing set in every copy at once (the
/// product of the copies' `loops` families).
pub fn replicated(r: usize, pad: usize) -> Result<Gadget> {
    if r == 0 {
        return Err(Error::LimitExceeded { what: "replicated copies", actual: 0, limit: 1 });
    }
    let per = 12 + pad;
    let n = 1 + r * per + 1;
    let tgt = n - 1;
    let mut edges = Vec::new();
    let mut blocks = Vec::new();
    for c in 0..r {
        let base = 1 + c * per;
        // path s_pad = first path id (or s0 itself when pad = 0)
        let path: Vec<NodeId> = (0..pad).map(|j| base + 12 + j).collect();
        let sk = path.first().copied().unwrap_or(0);
        let b = Block::at(base, sk);
        edges.extend(b.edges());
        let mut prev = sk;
        for &x in path.iter().skip(1) {
            edges.push((prev, x));
            prev = x;
        }
        if pad > 0 {
            edges.push((prev, 0));
        }
        edges.push((b.t, tgt));
        blocks.push(b);
    }
    let g = Graph::new(n, edges).and_then(|g| g.with_target(tgt)).and_then(|g| g.with_source(0))?;
    let layout = [
        "0: shared source s0".to_string(),
        format!("1 + c*{per} ..: copy c (block as in feigenbaum13 without its source, then its path)"),
        format!("{tgt}: global target"),
    ];
    let layout: Vec<&str> = layout.iter().map(|s| s.as_str()).collect();
    let mut joint = vec![FailureSet::empty()];
    for b in &blocks {
        let fam = b.loop_families().remove("loops").unwrap_or_default();
        joint = joint.iter().flat_map(|f| fam.iter().map(move |h| f.union(h))).collect();
    }
    Ok(Gadget::new("replicated", &[("r", r), ("pad", pad)], &layout, g).family("loops", joint))
}

/// Node `i = 0` with neighbors `v1, v2, v3 = 1, 2, 3` and `s = 4`; target
/// `t = 5` is reached through `v2` and `v3` only, `v1` hangs off `v2`, `v3`.
pub fn relevance_fig() -> Gadget {
    let g = Graph::new(6, [(0, 1), (0, 2), (0, 3), (0, 4), (2, 5), (3, 5), (1, 2), (1, 3)])
        .and_then(|g| g.with_target(5))
        .expect("valid");
    Gadget::new("relevance-fig", &[], &["0: i", "1, 2, 3: v1, v2, v3", "4: s", "5: t"], g)
}

/// Path `t – x – u – v – w` with chords `(t,v)`, `(u,w)`; ids
/// `t, x, u, v, w = 0..4`, source `u`. Family `counter`: `{(t,v)}`.
pub fn counter_fig() -> Gadget {
    let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 3), (2, 4)])
        .and_then(|g| g.with_target(0))
        .and_then(|g| g.with_source(2))
        .expect("valid");
    Gadget::new("counter-fig", &[], &["0..=4: t, x, u, v, w"], g)
        .family("counter", vec![FailureSet::from_pairs([(0, 3)])])
}

/// Partial table on [`counter_fig`] where `v` bounces a packet from `u`
/// once `(t,v)` is down, and `u` then turns to `x`.
pub fn counter_bounce_pattern() -> Pattern {
    let g = counter_fig().graph;
    let (t, x, u, v) = (0, 1, 2, 3);
    let mut table = PatternTable::new(false);
    let tv_down = g.failures_to_mask(v, &[t]).expect("valid");
    for (node, in_port, mask, out) in [(u, None, 0, v), (v, Some(u), tv_down, u), (v, Some(u), 0, t), (u, Some(v), 0, x), (x, Some(u), 0, t)] {
        table.insert(&g, EntryKey { node, mask, in_port, src: None }, out).expect("valid entry");
    }
    Pattern::Table(table)
}

/// A connected planar 7-node graph with target 6 on which the sweep finds
/// no perfectly resilient pattern.
pub fn planar7() -> Gadget {
    let g = Graph::new(
        7,
        [(4, 5), (5, 2), (2, 1), (1, 3), (3, 6), (4, 0), (0, 1), (2, 6), (0, 2), (0, 3), (5, 6), (3, 5)],
    )
    .and_then(|g| g.with_target(6))
    .expect("valid");
    Gadget::new("planar7", &[], &["0..=5: inner nodes", "6: target"], g)
}

/// Planar iff neither K5 nor K3,3 is a minor.
pub fn is_planar(g: &Graph) -> Result<bool> {
    Ok(!has_minor(g, &Graph::complete(5))? && !has_minor(g, &Graph::complete_bipartite(3, 3))?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVerdict {
    Found,
    Unsat,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub graph: Graph,
    pub target: NodeId,
    pub verdict: SweepVerdict,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub max_failures: usize,
    pub node_budget: u64,
    pub entries: Vec<SweepEntry>,
    /// First Unsat instance, with its certificate.
    pub witness: Option<Certificate>,
}

/// Searches planar connected `n`-node graphs (each candidate with every
/// target) for one admitting no pattern under failure sets of size at most
/// `max_failures`. Candidates in `first` are tried before the corpus, which
/// is ordered densest first. Stops at the first Unsat.
pub fn planar_sweep(n: usize, first: &[Gadget], max_failures: usize, node_budget: u64) -> Result<SweepReport> {
    let mut candidates: Vec<(Graph, NodeId)> = Vec::new();
    for g in first {
        candidates.push((g.graph.clone().without_rotation(), g.target()));
    }
    let mut corpus: Vec<Graph> =
        crate::corpus::connected_graphs_by_nodes(n).into_iter().filter(|g| g.node_count() == n).collect();
    corpus.sort_by_key(|g| std::cmp::Reverse(g.edge_count()));
    for g in corpus {
        if is_planar(&g)? && g.edge_count() + 6 > 2 * n {
            for t in g.nodes() {
                candidates.push((g.clone(), t));
            }
        }
    }
    let config = SynthesisConfig::new(FailureFamily::UpToK(max_failures)).pruning(Pruning::Orbit).node_budget(node_budget);
    let mut report = SweepReport { max_failures, node_budget, entries: Vec::new(), witness: None };
    for batch in candidates.chunks(rayon::current_num_threads().max(1)) {
        let results: Vec<Result<SynthesisResult>> =
            batch.par_iter().map(|(g, t)| synthesize(g, *t, &config)).collect();
        for ((g, t), r) in batch.iter().zip(results) {
            let r = r?;
            let verdict = match &r {
                SynthesisResult::Found { .. } => SweepVerdict::Found,
                SynthesisResult::Unsat(_) => SweepVerdict::Unsat,
                SynthesisResult::Inconclusive { .. } => SweepVerdict::Inconclusive,
            };
            report.entries.push(SweepEntry { graph: g.clone(), target: *t, verdict, stats: r.stats() });
            if let (None, SynthesisResult::Unsat(cert)) = (&report.witness, r) {
                report.witness = Some(*cert);
            }
        }
        if report.witness.is_some() {
            break;
        }
    }
    Ok(report)
}
