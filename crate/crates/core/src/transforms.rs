//! Pattern transfers along subgraph, contraction and minor steps, and
//! recovery of skipping patterns from patterns on 3-subdivisions.
//!
//! A transferred pattern is materialized as a table on the smaller graph.
//! Each of its entries simulates the original pattern with the removed links
//! treated as failed; at a merged node the packet is chased through the
//! internal link until it leaves.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forwarding::{tabulate, EvalError, Pattern, SkippingPattern};
use crate::graph::{Edge, FailureSet, Graph, NodeId};
use crate::minor::MinorModel;

/// One minor operation, in the ids of the graph it applies to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransferStep {
    /// Delete links, then nodes with their links; survivors are renumbered
    /// densely in increasing order.
    Subgraph { drop_edges: Vec<Edge>, drop_nodes: Vec<NodeId> },
    /// Merge `j` into `i`; ids above `j` shift down by one.
    Contraction { i: NodeId, j: NodeId },
}

/// A step applied to a concrete graph.
#[derive(Debug, Clone)]
pub struct AppliedStep {
    pub before: Graph,
    pub after: Graph,
    /// Before-id to after-id; `None` for deleted nodes.
    pub node_map: Vec<Option<NodeId>>,
    /// After-id to the before node that represents it (`i` for a merge).
    pub back: Vec<NodeId>,
    /// Links of `before` that count as failed after the step: deleted links,
    /// or the redundant links `R` of a contraction.
    pub removed: BTreeSet<Edge>,
    /// The contracted link `(i, j)`, which never fails.
    pub internal: Option<(NodeId, NodeId)>,
}

impl TransferStep {
    pub fn apply(&self, g: &Graph) -> Result<AppliedStep> {
        match self {
            TransferStep::Subgraph { drop_edges, drop_nodes } => {
                for e in drop_edges {
                    if !g.has_edge(e.0, e.1) {
                        return Err(Error::NotSubgraph(format!("{e} is not a link")));
                    }
                }
                let r = g.induced_remove(drop_edges, drop_nodes)?;
                let mut removed: BTreeSet<Edge> = drop_edges.iter().copied().collect();
                for &v in drop_nodes {
                    removed.extend(g.neighbors(v).iter().map(|&u| Edge::new(u, v)));
                }
                Ok(AppliedStep::new(g, r.graph, r.node_map, removed, None))
            }
            TransferStep::Contraction { i, j } => {
                let c = g.contract_edge(*i, *j)?;
                let removed = c.redundant.iter().copied().collect();
                Ok(AppliedStep::new(g, c.graph, c.node_map, removed, Some((*i, *j))))
            }
        }
    }
}

impl AppliedStep {
    fn new(
        before: &Graph,
        after: Graph,
        node_map: Vec<Option<NodeId>>,
        removed: BTreeSet<Edge>,
        internal: Option<(NodeId, NodeId)>,
    ) -> Self {
        let mut back = vec![usize::MAX; after.node_count()];
        for (v, m) in node_map.iter().enumerate().rev() {
            if let Some(m) = *m {
                back[m] = v;
            }
        }
        if let Some((i, _)) = internal {
            back[node_map[i].expect("kept")] = i;
        }
        Self { before: before.clone(), after, node_map, back, removed, internal }
    }

    /// The before-link realizing after-link `e`.
    pub fn before_edge(&self, e: Edge) -> Edge {
        let ends = |a: NodeId| -> Vec<NodeId> {
            match self.internal {
                Some(x) if self.node_map[x.0] == Some(a) => vec![x.0, x.1],
                _ => vec![self.back[a]],
            }
        };
        for &u in &ends(e.0) {
            for &v in &ends(e.1) {
                let be = Edge::new(u, v);
                if self.before.has_edge(u, v) && !self.removed.contains(&be) {
                    return be;
                }
            }
        }
        unreachable!("after-link {e} has a surviving preimage")
    }

    /// Failure set of `before` that the after-failures `f` stand for.
    pub fn lift(&self, f: &FailureSet) -> FailureSet {
        let mut out: BTreeSet<Edge> = f.iter().map(|e| self.before_edge(e)).collect();
        out.extend(self.removed.iter().copied());
        FailureSet::from_edges(out)
    }

    /// Local mask of before-node `v` given the after-mask of its image.
    fn before_mask(&self, v: NodeId, after_mask: u64) -> u64 {
        let vp = self.node_map[v].expect("surviving node");
        let mut mask = 0u64;
        for (k, &u) in self.before.neighbors(v).iter().enumerate() {
            let e = Edge::new(v, u);
            let failed = if self.removed.contains(&e) {
                true
            } else if self.internal.map(|(i, j)| Edge::new(i, j)) == Some(e) {
                false
            } else {
                let up = self.node_map[u].expect("kept link has kept ends");
                let port = self.after.port(vp, up).expect("kept link survives");
                after_mask & (1 << port) != 0
            };
            if failed {
                mask |= 1 << k;
            }
        }
        mask
    }

    /// Evaluates the transferred rule at after-node `v`.
    pub fn eval(
        &self,
        a: &Pattern,
        v: NodeId,
        in_port: Option<NodeId>,
        mask: u64,
        src: Option<NodeId>,
    ) -> std::result::Result<NodeId, EvalError> {
        let (mut cur, mut inp) = match in_port {
            None => (self.back[v], None),
            Some(x) => {
                let e = self.before_edge(Edge::new(v, x));
                if self.node_map[e.0] == Some(v) {
                    (e.0, Some(e.1))
                } else {
                    (e.1, Some(e.0))
                }
            }
        };
        let src = src.map(|s| self.back[s]);
        let mut seen = HashSet::new();
        loop {
            let out = a.eval(&self.before, cur, inp, self.before_mask(cur, mask), src)?;
            let op = self.node_map[out].ok_or(EvalError::Undefined { node: v })?;
            if op != v {
                return Ok(op);
            }
            // internal hop inside the merged node
            if !seen.insert((cur, inp)) {
                return Err(EvalError::Undefined { node: v });
            }
            inp = Some(cur);
            cur = out;
        }
    }

    fn table(&self, a: &Pattern) -> Result<Pattern> {
        let t = tabulate(&self.after, a.is_source_matching(), |k| {
            Ok(self.eval(a, k.node, k.in_port, k.mask, k.src).ok())
        })?;
        Ok(Pattern::Table(t))
    }
}

/// A pattern carried over to a smaller graph.
#[derive(Debug, Clone)]
pub struct Transfer {
    pub graph: Graph,
    pub pattern: Pattern,
    /// Original id to new id.
    pub node_map: Vec<Option<NodeId>>,
}

fn check_kept(step: &AppliedStep, tgt: NodeId, src: Option<NodeId>) -> Result<()> {
    if step.node_map.get(tgt).copied().flatten().is_none() {
        return Err(Error::TargetRemoved(tgt));
    }
    if let Some(s) = src {
        if step.node_map.get(s).copied().flatten().is_none() {
            return Err(Error::SourceRemoved(s));
        }
    }
    Ok(())
}

/// Restricts `a` to `g` minus the given links and nodes: every entry runs
/// `a` with the removed links failed. `tgt` (and the graph's source for
/// source-matching patterns) must survive.
pub fn subgraph_transfer(
    a: &Pattern,
    g: &Graph,
    tgt: NodeId,
    drop_edges: &[Edge],
    drop_nodes: &[NodeId],
) -> Result<Transfer> {
    g.check_node(tgt)?;
    let step = TransferStep::Subgraph { drop_edges: drop_edges.to_vec(), drop_nodes: drop_nodes.to_vec() }.apply(g)?;
    check_kept(&step, tgt, g.source().filter(|_| a.is_source_matching()))?;
    Ok(Transfer { pattern: step.table(a)?, graph: step.after.clone(), node_map: step.node_map })
}

/// The `(i, j)`-contracted pattern: other nodes run `a` with `R` failed and
/// `j` renamed to `i`; the merged node chases the packet through the link
/// `(i, j)`, and an endless `i ↔ j` exchange leaves the entry undefined.
pub fn contract_pattern(a: &Pattern, g: &Graph, i: NodeId, j: NodeId) -> Result<Transfer> {
    let step = TransferStep::Contraction { i, j }.apply(g)?;
    Ok(Transfer { pattern: step.table(a)?, graph: step.after.clone(), node_map: step.node_map })
}

/// Applies `steps` in order, transferring `a` along each.
pub fn minor_transfer(a: &Pattern, g: &Graph, tgt: NodeId, steps: &[TransferStep]) -> Result<Transfer> {
    g.check_node(tgt)?;
    let mut graph = g.clone();
    let mut pattern = a.clone();
    let mut node_map: Vec<Option<NodeId>> = g.nodes().map(Some).collect();
    let (mut t, mut s) = (tgt, g.source().filter(|_| a.is_source_matching()));
    for st in steps {
        let applied = st.apply(&graph)?;
        check_kept(&applied, t, s)?;
        pattern = applied.table(&pattern)?;
        for m in node_map.iter_mut() {
            *m = m.and_then(|x| applied.node_map[x]);
        }
        t = applied.node_map[t].expect("checked");
        s = s.map(|x| applied.node_map[x].expect("checked"));
        graph = applied.after;
    }
    Ok(Transfer { graph, pattern, node_map })
}

/// Steps that turn `g` into the minor described by `model` (branch sets
/// indexed by the nodes of `h`), plus the final id of each `h` node.
pub fn minor_steps(g: &Graph, h: &Graph, model: &MinorModel) -> Result<(Vec<TransferStep>, Vec<NodeId>)> {
    if !model.is_valid(g, h) {
        return Err(Error::NotSubgraph("branch sets do not model the minor".into()));
    }
    let mut steps = Vec::new();
    let mut owner = vec![None; g.node_count()];
    for (a, set) in model.branch_sets.iter().enumerate() {
        for &v in set {
            owner[v] = Some(a);
        }
    }
    let outside: Vec<NodeId> = g.nodes().filter(|&v| owner[v].is_none()).collect();
    let mut cur = g.clone();
    // ids of the current graph for every original node still present
    let mut ids: Vec<Option<NodeId>> = g.nodes().map(Some).collect();
    let mut push = |st: TransferStep, cur: &mut Graph, ids: &mut Vec<Option<NodeId>>| -> Result<()> {
        let ap = st.apply(cur)?;
        for x in ids.iter_mut() {
            *x = x.and_then(|y| ap.node_map[y]);
        }
        *cur = ap.after;
        steps.push(st);
        Ok(())
    };
    if !outside.is_empty() {
        push(TransferStep::Subgraph { drop_edges: Vec::new(), drop_nodes: outside }, &mut cur, &mut ids)?;
    }
    for set in &model.branch_sets {
        // contract a spanning tree of the branch set into its first node
        let root = set[0];
        let mut inside: Vec<NodeId> = vec![root];
        while inside.len() < set.len() {
            let (p, q) = inside
                .iter()
                .flat_map(|&p| g.neighbors(p).iter().map(move |&q| (p, q)))
                .find(|&(_, q)| set.contains(&q) && !inside.contains(&q))
                .ok_or_else(|| Error::NotSubgraph("branch set is not connected".into()))?;
            let _ = p;
            let (ri, qj) = (ids[root].expect("kept"), ids[q].expect("kept"));
            if !cur.has_edge(ri, qj) {
                return Err(Error::NotSubgraph("branch set tree link missing".into()));
            }
            push(TransferStep::Contraction { i: ri, j: qj }, &mut cur, &mut ids)?;
            inside.push(q);
            // q is now merged into root
            ids[q] = ids[root];
        }
    }
    let label: Vec<NodeId> = model.branch_sets.iter().map(|s| ids[s[0]].expect("kept")).collect();
    let extra: Vec<Edge> = cur
        .edges()
        .iter()
        .copied()
        .filter(|e| {
            let a = label.iter().position(|&x| x == e.0).expect("labelled");
            let b = label.iter().position(|&x| x == e.1).expect("labelled");
            !h.has_edge(a, b)
        })
        .collect();
    if !extra.is_empty() {
        push(TransferStep::Subgraph { drop_edges: extra, drop_nodes: Vec::new() }, &mut cur, &mut ids)?;
    }
    let label: Vec<NodeId> = model.branch_sets.iter().map(|s| ids[s[0]].expect("kept")).collect();
    Ok((steps, label))
}

/// Failure sets of `g` that the failure sets `fam` of the final minor stand
/// for: each minor link maps to its realizing link, and all links removed
/// along the way fail.
pub fn lift_family(g: &Graph, steps: &[TransferStep], fam: &[FailureSet]) -> Result<Vec<FailureSet>> {
    let mut applied = Vec::with_capacity(steps.len());
    let mut cur = g.clone();
    for st in steps {
        let ap = st.apply(&cur)?;
        cur = ap.after.clone();
        applied.push(ap);
    }
    Ok(fam
        .iter()
        .map(|f| applied.iter().rev().fold(f.clone(), |acc, ap| ap.lift(&acc)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum End {
    Delivered,
    Dead,
    Open,
}

/// Node sequence of a packet for at most `limit` hops.
fn walk(g: &Graph, masks: &[u64], step: impl Fn(NodeId, Option<NodeId>) -> std::result::Result<NodeId, EvalError>, src: NodeId, at_tgt: impl Fn(NodeId) -> bool, limit: usize) -> (Vec<NodeId>, End) {
    let mut nodes = vec![src];
    let (mut v, mut inp) = (src, None);
    for _ in 0..limit {
        if at_tgt(v) {
            return (nodes, End::Delivered);
        }
        let d = g.degree(v);
        if d == 0 || masks[v].count_ones() as usize == d {
            return (nodes, End::Dead);
        }
        match step(v, inp) {
            Ok(o) => {
                inp = Some(v);
                v = o;
                nodes.push(v);
            }
            Err(_) => return (nodes, End::Dead),
        }
    }
    if at_tgt(v) {
        (nodes, End::Delivered)
    } else {
        (nodes, End::Open)
    }
}

fn collapse(seq: impl IntoIterator<Item = NodeId>) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::new();
    for x in seq {
        if out.last() != Some(&x) {
            out.push(x);
        }
    }
    out
}

/// Whether a projected walk `q` (with end `qe`) agrees with a walk `p`.
fn same_walk(q: &[NodeId], qe: End, p: &[NodeId], pe: End) -> bool {
    match (qe, pe) {
        (End::Open, End::Open) => {
            let k = q.len().min(p.len());
            q[..k] == p[..k]
        }
        // an endless exchange inside the merged node shows up as undefined
        (End::Open, End::Dead) => q == p,
        (a, b) => a == b && q == p,
    }
}

fn walk_limit(g: &Graph) -> usize {
    4 * (2 * g.edge_count() + 2)
}

/// Checks that the walk of `a` on `g` under `f' ∪ R` from `src'` maps, with
/// `j` renamed to `i` and repeats removed, onto the walk of `a_prime` on the
/// contraction under `f'`. Ids `src'`, `tgt'` and `f'` are contracted ids.
/// The walk on `g` ends at the first node that maps to `tgt'`.
pub fn path_correspondence_with(
    a: &Pattern,
    a_prime: &Pattern,
    g: &Graph,
    i: NodeId,
    j: NodeId,
    f_prime: &FailureSet,
    src: NodeId,
    tgt: NodeId,
) -> Result<bool> {
    let step = TransferStep::Contraction { i, j }.apply(g)?;
    let gp = &step.after;
    gp.check_node(src)?;
    gp.check_node(tgt)?;
    let f = step.lift(&gp.failure_set(f_prime.iter())?);
    let bs = step.back[src];
    let masks = g.local_masks(&f);
    let sm = a.is_source_matching().then_some(bs);
    let (p, pe) = walk(g, &masks, |v, i| a.eval(g, v, i, masks[v], sm), bs, |v| step.node_map[v] == Some(tgt), walk_limit(g));
    let q = collapse(p.iter().map(|&v| step.node_map[v].expect("contraction keeps every node")));
    let masks_p = gp.local_masks(f_prime);
    let smp = a_prime.is_source_matching().then_some(src);
    let (pp, ppe) = walk(gp, &masks_p, |v, i| a_prime.eval(gp, v, i, masks_p[v], smp), src, |v| v == tgt, walk_limit(g));
    Ok(same_walk(&q, pe, &pp, ppe))
}

/// [`path_correspondence_with`] against the contracted pattern of `a`.
pub fn path_correspondence(
    a: &Pattern,
    g: &Graph,
    i: NodeId,
    j: NodeId,
    f_prime: &FailureSet,
    src: NodeId,
    tgt: NodeId,
) -> Result<bool> {
    let t = contract_pattern(a, g, i, j)?;
    path_correspondence_with(a, &t.pattern, g, i, j, f_prime, src, tgt)
}

/// A skipping pattern recovered from a pattern on the 3-subdivision.
#[derive(Debug, Clone)]
pub struct DerivedSkipping {
    pub pattern: SkippingPattern,
    /// Directed links `(u, v)` that the subdivided pattern never crosses
    /// from `u` while the middle link is up.
    pub cut: Vec<(NodeId, NodeId)>,
}

/// Reads a skipping pattern on `g` off a pattern `phi` on `subdivide3(g)`.
///
/// Old nodes of the subdivision never see failures, so their rules give the
/// successor map and start port directly. A direction `u → v` is cut when
/// the new node next to `u` bounces packets from `u`, or the one next to
/// `v` bounces packets from its partner, with the middle link up. A missing
/// entry counts as a bounce. Cut directions become blocked ports. Old-node
/// states without an entry are never reached and are filled arbitrarily.
pub fn derive_skipping(phi: &Pattern, g: &Graph, tgt: NodeId) -> Result<DerivedSkipping> {
    g.check_node(tgt)?;
    if phi.is_source_matching() {
        return Err(Error::Pattern("derive_skipping needs a pattern without source matching".into()));
    }
    let n = g.node_count();
    let (h, _) = g.subdivide3();
    let ev = |v: NodeId, i: Option<NodeId>| -> Result<NodeId> {
        phi.eval(&h, v, i, 0, None).map_err(|e| Error::Pattern(format!("subdivided pattern: {e}")))
    };
    // new node on edge k next to endpoint v
    let near = |k: usize, v: NodeId| if g.edges()[k].0 == v { n + 2 * k } else { n + 2 * k + 1 };
    // the old neighbor behind new node x
    let across = |x: NodeId, v: NodeId| g.edges()[(x - n) / 2].other(v);
    let mut cut = Vec::new();
    for (k, e) in g.edges().iter().enumerate() {
        for (u, v) in [(e.0, e.1), (e.1, e.0)] {
            let (nu, nv) = (near(k, u), near(k, v));
            // an undefined entry never forwards, which counts as a bounce
            let bounces = |x: NodeId, from: NodeId| phi.eval(&h, x, Some(from), 0, None).map_or(true, |o| o == from);
            if bounces(nu, u) || bounces(nv, nu) {
                cut.push((u, v));
            }
        }
    }
    let mut next = vec![BTreeMap::new(); n];
    let mut start = vec![None; n];
    let mut blocked = vec![Vec::new(); n];
    for v in g.nodes() {
        if g.degree(v) == 0 {
            continue;
        }
        let mut hit: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut missing = Vec::new();
        for (k, e) in g.edges().iter().enumerate().filter(|(_, e)| e.touches(v)) {
            let u = e.other(v);
            let out = match phi.eval(&h, v, Some(near(k, v)), 0, None) {
                Ok(x) => across(x, v),
                Err(EvalError::Undefined { .. }) => {
                    missing.push(u);
                    continue;
                }
                Err(_) => across(ev(v, Some(near(k, v)))?, v),
            };
            if let Some(prev) = hit.insert(out, u) {
                return Err(Error::NonBijective {
                    node: v,
                    witness: format!("in-ports {prev} and {u} both forward to {out}"),
                });
            }
            next[v].insert(u, out);
        }
        // states no walk reaches get the unused outputs in ascending order
        let mut free = g.neighbors(v).iter().copied().filter(|o| !hit.contains_key(o));
        for u in missing {
            next[v].insert(u, free.next().expect("one free output per missing in-port"));
        }
        start[v] = Some(match phi.eval(&h, v, None, 0, None) {
            Ok(x) => across(x, v),
            Err(EvalError::Undefined { .. }) => g.neighbors(v)[0],
            Err(_) => across(ev(v, None)?, v),
        });
        blocked[v] = cut.iter().filter(|c| c.0 == v).map(|c| c.1).collect();
    }
    let pattern = SkippingPattern::from_maps(g, &next, &start, &blocked)?;
    Ok(DerivedSkipping { pattern, cut })
}

/// First `(F, src)` on which the old-node walk of `phi` on the subdivision
/// differs from the walk of `derived` on `g` (repeats removed), over all
/// failure sets of `g` and sources connected to `tgt`.
pub fn check_derived(g: &Graph, tgt: NodeId, phi: &Pattern, derived: &SkippingPattern) -> Result<Option<(FailureSet, NodeId)>> {
    let m = g.edge_count();
    if m > crate::resilience::ALL_SUBSETS_EDGE_LIMIT {
        return Err(Error::LimitExceeded { what: "edges for derived check", actual: m, limit: crate::resilience::ALL_SUBSETS_EDGE_LIMIT });
    }
    let n = g.node_count();
    let (h, middle) = g.subdivide3();
    let dp = Pattern::Skipping(derived.clone());
    for bits in 0u64..(1 << m) {
        let f = FailureSet::from_edges((0..m).filter(|k| bits & (1 << k) != 0).map(|k| g.edges()[k]));
        let fh = FailureSet::from_edges((0..m).filter(|k| bits & (1 << k) != 0).map(|k| middle[k]));
        let masks = g.local_masks(&f);
        let hmasks = h.local_masks(&fh);
        let reach = g.reachable_with_masks(&masks, tgt);
        for s in g.nodes().filter(|&s| s != tgt && reach[s]) {
            let (p, pe) = walk(g, &masks, |v, i| dp.eval(g, v, i, masks[v], None), s, |v| v == tgt, walk_limit(g));
            let (q, qe) = walk(&h, &hmasks, |v, i| phi.eval(&h, v, i, hmasks[v], None), s, |v| v == tgt, walk_limit(&h));
            let q = collapse(q.into_iter().filter(|&v| v < n));
            if !same_walk(&q, qe, &p, pe) {
                return Ok(Some((f, s)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::outerplanar_pattern;
    use crate::resilience::{verify, FailureFamily};
    use crate::synthesis::{synthesize, SynthesisConfig, SynthesisResult};

    fn perfect(g: &Graph, p: &Pattern, t: NodeId) -> bool {
        verify(g, p, t, &FailureFamily::AllSubsets, None).unwrap().verdict
    }

    fn skipping_cycle(n: usize) -> (Graph, Pattern) {
        let g = Graph::cycle(n);
        let p = Pattern::Skipping(outerplanar_pattern(&g, 0).unwrap());
        (g, p)
    }

    #[test]
    fn identity_subgraph_transfer() {
        let (g, p) = skipping_cycle(5);
        let t = subgraph_transfer(&p, &g, 0, &[], &[]).unwrap();
        let direct = crate::forwarding::compile_to_table(&p, &g).unwrap();
        assert_eq!(t.pattern, Pattern::Table(direct));
    }

    #[test]
    fn subgraph_transfer_keeps_resilience() {
        let (g, p) = skipping_cycle(5);
        let t = subgraph_transfer(&p, &g, 0, &[Edge::new(1, 2)], &[]).unwrap();
        assert!(perfect(&t.graph, &t.pattern, 0));
        assert!(matches!(subgraph_transfer(&p, &g, 0, &[], &[0]), Err(Error::TargetRemoved(0))));
        assert!(matches!(subgraph_transfer(&p, &g, 0, &[Edge::new(0, 2)], &[]), Err(Error::NotSubgraph(_))));
    }

    #[test]
    fn pendant_contraction_equals_deletion_for_skipping() {
        // cycle 0..4 plus pendant 4 on node 2
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 0), (2, 4)]).unwrap();
        let rot = crate::embedding::find_outerplanar_rotation(&g).unwrap().unwrap();
        let g = g.with_rotation(rot).unwrap();
        let p = Pattern::Skipping(outerplanar_pattern(&g, 0).unwrap());
        let c = contract_pattern(&p, &g, 2, 4).unwrap();
        let s = subgraph_transfer(&p, &g, 0, &[], &[4]).unwrap();
        assert_eq!(c.graph, s.graph.clone().without_rotation().with_rotation(c.graph.rotation().unwrap().to_vec()).unwrap());
        let (Pattern::Table(ct), Pattern::Table(st)) = (&c.pattern, &s.pattern) else { panic!() };
        assert_eq!(ct.entries, st.entries);
    }

    #[test]
    fn triangle_to_edge_delivers() {
        let g = Graph::complete(3);
        let r = synthesize(&g, 0, &SynthesisConfig::new(FailureFamily::AllSubsets)).unwrap();
        let SynthesisResult::Found { table, .. } = r else { panic!() };
        let p = Pattern::Table(table);
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            let t = contract_pattern(&p, &g, i, j).unwrap();
            let tgt = t.node_map[0].unwrap();
            let src = 1 - tgt;
            let tr = crate::routing::route(&t.graph, &FailureSet::empty(), &t.pattern, src, tgt).unwrap();
            assert!(tr.delivered());
            for s in 0..2 {
                if s != tgt {
                    assert!(path_correspondence(&p, &g, i, j, &FailureSet::empty(), s, tgt).unwrap());
                }
            }
        }
    }

    #[test]
    fn corrupted_chase_is_detected() {
        let (g, p) = skipping_cycle(5);
        // contract (0,1): merged node 0; corrupt by routing every packet back
        let t = contract_pattern(&p, &g, 0, 1).unwrap();
        let Pattern::Table(mut tab) = t.pattern.clone() else { panic!() };
        for (k, out) in tab.entries.iter_mut() {
            if k.node == 0 {
                if let Some(u) = k.in_port {
                    *out = u;
                }
            }
        }
        let bad = Pattern::Table(tab);
        let mut all_ok = true;
        for s in 1..4 {
            all_ok &= path_correspondence_with(&p, &bad, &g, 0, 1, &FailureSet::empty(), s, 2).unwrap();
        }
        assert!(!all_ok);
    }

    #[test]
    fn minor_transfer_k4_to_k3() {
        let k4 = crate::gadgets::k4().graph;
        let p = crate::constructions::target_removal_pattern(&k4, 3).unwrap();
        let steps = [TransferStep::Contraction { i: 0, j: 1 }];
        let t = minor_transfer(&p, &k4, 3, &steps).unwrap();
        assert_eq!(t.graph.node_count(), 3);
        assert!(perfect(&t.graph, &t.pattern, t.node_map[3].unwrap()));
        let id = minor_transfer(&p, &k4, 3, &[]).unwrap();
        assert_eq!(id.graph, k4);
        let drop = [TransferStep::Subgraph { drop_edges: vec![], drop_nodes: vec![3] }];
        assert!(matches!(minor_transfer(&p, &k4, 3, &drop), Err(Error::TargetRemoved(3))));
    }

    #[test]
    fn minor_steps_reach_k5() {
        let g = Graph::complete(6);
        let h = Graph::complete(5);
        let model = crate::minor::find_minor(&g, &h).unwrap().unwrap();
        let (steps, label) = minor_steps(&g, &h, &model).unwrap();
        let mut cur = g.clone();
        for s in &steps {
            cur = s.apply(&cur).unwrap().after;
        }
        assert_eq!(cur.edge_count(), 10);
        let lifted = lift_family(&g, &steps, &[FailureSet::from_pairs([(label[0], label[4])])]).unwrap();
        assert!(!lifted[0].is_empty());
    }

    #[test]
    fn derive_round_trip_on_cycle() {
        let g = Graph::cycle(4);
        let (h, _) = g.subdivide3();
        // degree two leaves a single cyclic order
        let rot = h.nodes().map(|v| h.neighbors(v).to_vec()).collect();
        let h = h.with_rotation(rot).unwrap();
        let phi = Pattern::Skipping(outerplanar_pattern(&h, 0).unwrap());
        let d = derive_skipping(&phi, &g, 0).unwrap();
        assert!(d.cut.is_empty());
        assert!(perfect(&g, &Pattern::Skipping(d.pattern.clone()), 0));
        assert_eq!(check_derived(&g, 0, &phi, &d.pattern).unwrap(), None);
    }
}
