//! Backtracking search for forwarding tables on small graphs.
//!
//! Table entries are created lazily: cases `(F, src)` are simulated in
//! canonical order against the partial table, and the first query of a
//! missing entry branches over every live out-port. A case ending in a loop
//! refutes the current branch. Exhausting the tree yields a replayable
//! certificate.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forwarding::{EntryKey, EvalError, Pattern, PatternTable};
use crate::graph::{Graph, NodeId};
use crate::resilience::{
    edge_ports, family_masks, follow_requirement, mask_to_failure_set, port_masks, verify, ChainStatus,
    FailureFamily, OrbitAnalysis, Requirement,
};
use crate::routing::{simulate, DeadReason, Hop, Outcome, RouteTrace};

/// Certificate format version; replay rejects anything else.
pub const CERTIFICATE_VERSION: &str = "failover-lab-cert/1";
pub const DEFAULT_NODE_BUDGET: u64 = 20_000_000;
const SEARCH_STACK: usize = 1 << 29;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pruning {
    None,
    /// Skip assignments that break a necessary orbit condition. In
    /// source-matching mode only neighbors next to the source are used as
    /// entry points.
    Orbit,
    /// `Orbit`, and in source-matching mode entry through any disjoint relay
    /// path, which covers forced forwarding at live degree two.
    OrbitDegree2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub family: FailureFamily,
    pub source_matching: bool,
    pub pruning: Pruning,
    /// Restrict packets to this source; all nodes but the target otherwise.
    pub source: Option<NodeId>,
    /// Maximum number of search-tree nodes before giving up.
    pub node_budget: u64,
}

impl SynthesisConfig {
    pub fn new(family: FailureFamily) -> Self {
        Self { family, source_matching: false, pruning: Pruning::None, source: None, node_budget: DEFAULT_NODE_BUDGET }
    }

    pub fn source_matching(mut self, on: bool) -> Self {
        self.source_matching = on;
        self
    }

    pub fn pruning(mut self, p: Pruning) -> Self {
        self.pruning = p;
        self
    }

    pub fn source(mut self, s: Option<NodeId>) -> Self {
        self.source = s;
        self
    }

    pub fn node_budget(mut self, b: u64) -> Self {
        self.node_budget = b;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub cases: usize,
    pub search_nodes: u64,
    pub refutations: u64,
    pub pruned: u64,
    pub backjumps: u64,
    pub max_depth: usize,
}

/// Exhausted search tree. `Pruned` only occurs as a branch child.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchNode {
    Refuted { case: usize, trace: RouteTrace },
    Pruned { requirement: Requirement },
    Branch { key: EntryKey, children: Vec<(NodeId, SearchNode)> },
}

impl SearchNode {
    pub fn size(&self) -> usize {
        match self {
            SearchNode::Branch { children, .. } => 1 + children.iter().map(|(_, c)| c.size()).sum::<usize>(),
            _ => 1,
        }
    }

    /// Refutations in depth-first order, mutable for tamper tests.
    pub fn refutations_mut(&mut self) -> Vec<&mut RouteTrace> {
        match self {
            SearchNode::Refuted { trace, .. } => vec![trace],
            SearchNode::Pruned { .. } => Vec::new(),
            SearchNode::Branch { children, .. } => children.iter_mut().flat_map(|(_, c)| c.refutations_mut()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub version: String,
    pub graph: Graph,
    pub target: NodeId,
    pub config: SynthesisConfig,
    pub root: Option<SearchNode>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthesisResult {
    Found { table: PatternTable, stats: SearchStats, config: SynthesisConfig },
    Unsat(Box<Certificate>),
    Inconclusive { stats: SearchStats, config: SynthesisConfig },
}

impl SynthesisResult {
    pub fn is_found(&self) -> bool {
        matches!(self, SynthesisResult::Found { .. })
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SynthesisResult::Unsat(_))
    }

    pub fn stats(&self) -> SearchStats {
        match self {
            SynthesisResult::Found { stats, .. } | SynthesisResult::Inconclusive { stats, .. } => *stats,
            SynthesisResult::Unsat(c) => c.stats,
        }
    }
}

/// One packet to deliver: failure-set index, per-node masks, source.
struct Case {
    masks: usize,
    src: NodeId,
}

struct Instance<'a> {
    g: &'a Graph,
    tgt: NodeId,
    config: &'a SynthesisConfig,
    masks: Vec<Vec<u64>>,
    cases: Vec<Case>,
    /// Hop distance to the target without failures.
    dist: Vec<usize>,
}

impl<'a> Instance<'a> {
    fn new(g: &'a Graph, tgt: NodeId, config: &'a SynthesisConfig) -> Result<Self> {
        g.check_node(tgt)?;
        if let Some(s) = config.source {
            g.check_node(s)?;
            if s == tgt {
                return Err(Error::TargetIsSource(s));
            }
        }
        let fam = family_masks(g, &config.family)?;
        let ports = edge_ports(g);
        let mut masks = Vec::with_capacity(fam.len());
        let mut cases = Vec::new();
        for &fm in &fam {
            let pm = port_masks(g, &ports, fm);
            let reach = g.reachable_with_masks(&pm, tgt);
            let idx = masks.len();
            for s in g.nodes() {
                if s != tgt && reach[s] && config.source.is_none_or(|x| x == s) {
                    cases.push(Case { masks: idx, src: s });
                }
            }
            masks.push(pm);
        }
        let mut dist = vec![usize::MAX; g.node_count()];
        dist[tgt] = 0;
        let mut queue = std::collections::VecDeque::from([tgt]);
        while let Some(v) = queue.pop_front() {
            for &u in g.neighbors(v) {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        Ok(Self { g, tgt, config, masks, cases, dist })
    }

    fn key(&self, case: &Case, v: NodeId, in_port: Option<NodeId>) -> EntryKey {
        let src = self.config.source_matching.then_some(case.src);
        EntryKey { node: v, mask: self.masks[case.masks][v], in_port, src }
    }

    /// Runs one case against `table`; `Err(key)` names the first missing entry.
    fn run(&self, idx: usize, table: &HashMap<EntryKey, NodeId>) -> std::result::Result<RouteTrace, EntryKey> {
        let case = &self.cases[idx];
        let mut missing = None;
        let (hops, outcome) = simulate(self.g, case.src, self.tgt, |v, i| {
            let k = self.key(case, v, i);
            match table.get(&k) {
                Some(&o) => Ok(o),
                None => {
                    missing = Some(k);
                    Err(EvalError::Undefined { node: v })
                }
            }
        });
        match missing {
            Some(k) => Err(k),
            None => Ok(RouteTrace { source: case.src, target: self.tgt, hops, outcome }),
        }
    }

    /// Table entries read by a completed trace of case `idx`.
    fn trace_keys(&self, idx: usize, trace: &RouteTrace) -> Conflict {
        let case = &self.cases[idx];
        trace.hops.iter().map(|h| self.key(case, h.node, h.in_port)).collect()
    }

    /// Candidate out-ports of a key, nearest to the target first; ties keep
    /// rotation order if present, else ascending ids.
    fn candidates(&self, key: &EntryKey) -> Vec<NodeId> {
        let g = self.g;
        let v = key.node;
        let live = |u: &NodeId| g.port(v, *u).is_some_and(|k| key.mask & (1 << k) == 0);
        let mut c: Vec<NodeId> = match g.rotation() {
            Some(rot) => rot[v].iter().copied().filter(live).collect(),
            None => g.neighbors(v).iter().copied().filter(live).collect(),
        };
        c.sort_by_key(|&u| self.dist[u]);
        c
    }

    fn requirements(&self, an: &mut OrbitAnalysis, key: &EntryKey) -> Vec<Requirement> {
        match (self.config.pruning, key.src) {
            (Pruning::None, _) => Vec::new(),
            (_, None) => an.target_requirements(self.g, key.node, key.mask, self.tgt).to_vec(),
            (p, Some(s)) => an
                .source_requirements(self.g, key.node, key.mask, self.tgt, s, p == Pruning::Orbit)
                .to_vec(),
        }
    }
}

/// First requirement broken by setting `key ↦ out` on top of `table`, with
/// the entries its chain read.
fn violated(
    reqs: &[Requirement],
    g: &Graph,
    key: &EntryKey,
    out: NodeId,
    table: &HashMap<EntryKey, NodeId>,
) -> Option<(Requirement, Conflict)> {
    for r in reqs {
        let mut read = Conflict::new();
        let look = |x: NodeId| {
            let k = EntryKey { in_port: Some(x), ..*key };
            let v = if Some(x) == key.in_port { Some(out) } else { table.get(&k).copied() };
            if v.is_some() {
                read.insert(k);
            }
            v
        };
        if follow_requirement(r, g.degree(key.node), look) == ChainStatus::Violated {
            return Some((r.clone(), read));
        }
    }
    None
}

/// Entries a refutation depends on.
type Conflict = HashSet<EntryKey>;

enum Step {
    Found,
    Exhausted(SearchNode, Conflict),
    OutOfBudget,
}

/// Where each re-run case went after an assignment: delivered (`None`) or
/// waiting on another entry.
type Moves = Vec<Option<EntryKey>>;

/// Backtracking state. Every undelivered case waits on the first entry its
/// simulation is missing; assigning an entry re-runs only its waiters.
struct Search<'a> {
    inst: Instance<'a>,
    table: HashMap<EntryKey, NodeId>,
    watch: BTreeMap<EntryKey, Vec<usize>>,
    analysis: OrbitAnalysis,
    stats: SearchStats,
    depth: usize,
}

impl Search<'_> {
    /// Runs every case on the empty table; returns a refutation if one
    /// already fails.
    fn start(&mut self) -> Option<(usize, RouteTrace)> {
        for c in 0..self.inst.cases.len() {
            match self.inst.run(c, &self.table) {
                Ok(t) if t.outcome == Outcome::Delivered => {}
                Ok(t) => return Some((c, t)),
                Err(k) => self.watch.entry(k).or_default().push(c),
            }
        }
        None
    }

    fn assign(&mut self, key: EntryKey, out: NodeId) -> (Vec<usize>, Moves, Option<(usize, RouteTrace)>) {
        self.table.insert(key, out);
        let waiting = self.watch.remove(&key).unwrap_or_default();
        let mut moves = Vec::with_capacity(waiting.len());
        for &c in &waiting {
            match self.inst.run(c, &self.table) {
                Ok(t) if t.outcome == Outcome::Delivered => moves.push(None),
                Ok(t) => return (waiting, moves, Some((c, t))),
                Err(k) => {
                    self.watch.entry(k).or_default().push(c);
                    moves.push(Some(k));
                }
            }
        }
        (waiting, moves, None)
    }

    fn undo(&mut self, key: EntryKey, waiting: Vec<usize>, moves: Moves) {
        for m in moves.into_iter().rev().flatten() {
            let list = self.watch.get_mut(&m).expect("moved case is watched");
            list.pop();
            if list.is_empty() {
                self.watch.remove(&m);
            }
        }
        self.watch.insert(key, waiting);
        self.table.remove(&key);
    }

    /// Open entry with the fewest out-ports that survive pruning, ties
    /// broken by most waiting cases.
    fn choose(&mut self) -> EntryKey {
        let mut best: Option<(usize, std::cmp::Reverse<usize>, EntryKey)> = None;
        let keys: Vec<(EntryKey, usize)> = self.watch.iter().map(|(k, w)| (*k, w.len())).collect();
        for (key, waiting) in keys {
            let reqs = self.inst.requirements(&mut self.analysis, &key);
            let open = self
                .inst
                .candidates(&key)
                .into_iter()
                .filter(|&o| violated(&reqs, self.inst.g, &key, o, &self.table).is_none())
                .count();
            let score = (open, std::cmp::Reverse(waiting), key);
            if best.as_ref().is_none_or(|b| score < *b) {
                best = Some(score);
            }
            if open == 0 {
                break;
            }
        }
        best.expect("some entry is open").2
    }

    fn solve(&mut self) -> Step {
        self.stats.search_nodes += 1;
        if self.stats.search_nodes > self.inst.config.node_budget {
            return Step::OutOfBudget;
        }
        if self.watch.is_empty() {
            return Step::Found;
        }
        let key = self.choose();
        self.branch(key)
    }

    /// Tries every live out-port of `key`. If a child's refutation does not
    /// depend on `key`, the remaining out-ports are skipped (backjump).
    fn branch(&mut self, key: EntryKey) -> Step {
        let reqs = self.inst.requirements(&mut self.analysis, &key);
        let mut children = Vec::new();
        let mut conflict = Conflict::new();
        self.depth += 1;
        self.stats.max_depth = self.stats.max_depth.max(self.depth);
        for out in self.inst.candidates(&key) {
            let (node, mut sub) = if let Some((r, read)) = violated(&reqs, self.inst.g, &key, out, &self.table) {
                self.stats.pruned += 1;
                (SearchNode::Pruned { requirement: r }, read)
            } else {
                let (waiting, moves, refuted) = self.assign(key, out);
                let step = match refuted {
                    Some((case, trace)) => {
                        self.stats.refutations += 1;
                        let c = self.inst.trace_keys(case, &trace);
                        Step::Exhausted(SearchNode::Refuted { case, trace }, c)
                    }
                    None => self.solve(),
                };
                match step {
                    Step::Found => {
                        self.depth -= 1;
                        return Step::Found;
                    }
                    Step::OutOfBudget => {
                        self.depth -= 1;
                        return Step::OutOfBudget;
                    }
                    Step::Exhausted(node, c) => {
                        self.undo(key, waiting, moves);
                        (node, c)
                    }
                }
            };
            children.push((out, node));
            let independent = !sub.remove(&key);
            conflict.extend(sub);
            if independent {
                self.stats.backjumps += 1;
                break;
            }
        }
        self.depth -= 1;
        Step::Exhausted(SearchNode::Branch { key, children }, conflict)
    }
}

fn on_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(SEARCH_STACK)
            .spawn_scoped(s, f)
            .expect("spawn search thread")
            .join()
            .expect("search thread panicked")
    })
}

/// Decides whether some table delivers every case of the configured family.
pub fn synthesize(g: &Graph, tgt: NodeId, config: &SynthesisConfig) -> Result<SynthesisResult> {
    let inst = Instance::new(g, tgt, config)?;
    let cases = inst.cases.len();
    let mut search = Search {
        inst,
        table: HashMap::new(),
        watch: BTreeMap::new(),
        analysis: OrbitAnalysis::new(),
        stats: SearchStats::default(),
        depth: 0,
    };
    search.stats.cases = cases;
    let (step, search) = on_big_stack(move || {
        let step = match search.start() {
            Some((case, trace)) => {
                search.stats.refutations += 1;
                let c = search.inst.trace_keys(case, &trace);
                Step::Exhausted(SearchNode::Refuted { case, trace }, c)
            }
            None => search.solve(),
        };
        (step, search)
    });
    let stats = search.stats;
    match step {
        Step::OutOfBudget => Ok(SynthesisResult::Inconclusive { stats, config: config.clone() }),
        Step::Exhausted(root, _) => Ok(SynthesisResult::Unsat(Box::new(Certificate {
            version: CERTIFICATE_VERSION.to_string(),
            graph: g.clone(),
            target: tgt,
            config: config.clone(),
            root: Some(root),
            stats,
        }))),
        Step::Found => {
            let mut table = PatternTable::new(config.source_matching);
            table.entries.extend(search.table);
            check_found(g, tgt, config, &table)?;
            Ok(SynthesisResult::Found { table, stats, config: config.clone() })
        }
    }
}

/// Post-hoc verification of a found table over the synthesis family.
fn check_found(g: &Graph, tgt: NodeId, config: &SynthesisConfig, table: &PatternTable) -> Result<()> {
    let p = Pattern::Table(table.clone());
    let sources: Vec<Option<NodeId>> = match (config.source, config.source_matching) {
        (Some(s), _) => vec![Some(s)],
        (None, true) => g.nodes().filter(|&v| v != tgt).map(Some).collect(),
        (None, false) => vec![None],
    };
    for s in sources {
        let r = verify(g, &p, tgt, &config.family, s)?;
        if !r.verdict {
            return Err(Error::Pattern(format!("synthesized table fails verification: {:?}", r.counterexample)));
        }
    }
    Ok(())
}

/// `synthesize` over all failure sets of size at most `k`, without pruning.
pub fn synthesize_k(g: &Graph, tgt: NodeId, k: usize, source_matching: bool) -> Result<SynthesisResult> {
    synthesize(g, tgt, &SynthesisConfig::new(FailureFamily::UpToK(k)).source_matching(source_matching))
}

/// Re-executes every refutation and pruning decision of an Unsat certificate.
pub fn replay(cert: &Certificate) -> Result<bool> {
    if cert.version != CERTIFICATE_VERSION {
        return Err(Error::Certificate(format!(
            "version mismatch: expected {CERTIFICATE_VERSION}, found {}",
            cert.version
        )));
    }
    let root = cert.root.as_ref().ok_or_else(|| Error::Certificate("certificate has no search tree".into()))?;
    if matches!(root, SearchNode::Pruned { .. }) {
        return Err(Error::Certificate("root cannot be a pruned branch".into()));
    }
    let g = &cert.graph;
    let config = cert.config.clone();
    let inst = Instance::new(g, cert.target, &config)?;
    let mut table = HashMap::new();
    let mut an = OrbitAnalysis::new();
    on_big_stack(|| Ok(replay_node(&inst, root, &mut table, &mut an).is_some()))
}

/// Checks one subtree and returns its conflict set, or `None` if any step
/// fails to reproduce.
fn replay_node(
    inst: &Instance,
    node: &SearchNode,
    table: &mut HashMap<EntryKey, NodeId>,
    an: &mut OrbitAnalysis,
) -> Option<Conflict> {
    match node {
        SearchNode::Refuted { case, trace } => {
            let t = inst.run(*case, table).ok()?;
            let ok = t == *trace && !matches!(t.outcome, Outcome::Delivered | Outcome::Dead(DeadReason::Undefined));
            ok.then(|| inst.trace_keys(*case, &t))
        }
        SearchNode::Pruned { .. } => None,
        SearchNode::Branch { key, children } => {
            if table.contains_key(key) || key.node >= inst.g.node_count() {
                return None;
            }
            let cands = inst.candidates(key);
            if children.is_empty() || children.len() > cands.len() || cands.iter().zip(children).any(|(a, (b, _))| a != b) {
                return None;
            }
            let reqs = inst.requirements(an, key);
            let mut conflict = Conflict::new();
            let mut covered = false;
            for (idx, (out, child)) in children.iter().enumerate() {
                let mut sub = match child {
                    SearchNode::Pruned { requirement } => {
                        if !reqs.contains(requirement) {
                            return None;
                        }
                        violated(std::slice::from_ref(requirement), inst.g, key, *out, table)?.1
                    }
                    _ => {
                        table.insert(*key, *out);
                        let r = replay_node(inst, child, table, an);
                        table.remove(key);
                        r?
                    }
                };
                covered = !sub.remove(key);
                conflict.extend(sub);
                if covered && idx + 1 != children.len() {
                    return None;
                }
            }
            // without a backjump every out-port must be refuted
            if covered || children.len() == cands.len() {
                Some(conflict)
            } else {
                None
            }
        }
    }
}

/// Node sequence of a trace (for matching against textbook loops).
pub fn hop_nodes(hops: &[Hop]) -> Vec<NodeId> {
    hops.iter().map(|h| h.node).collect()
}

/// Failure set of a case, for reporting refutations.
pub fn case_failures(
    g: &Graph,
    tgt: NodeId,
    config: &SynthesisConfig,
    case: usize,
) -> Result<Option<(crate::graph::FailureSet, NodeId)>> {
    let inst = Instance::new(g, tgt, config)?;
    let fam = family_masks(g, &config.family)?;
    Ok(inst.cases.get(case).map(|c| (mask_to_failure_set(g, fam[c.masks]), c.src)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::FailureSet;

    #[test]
    fn four_cycle_all_subsets_found() {
        let g = Graph::cycle(4);
        let r = synthesize(&g, 0, &SynthesisConfig::new(FailureFamily::AllSubsets)).unwrap();
        assert!(r.is_found(), "{r:?}");
    }

    #[test]
    fn tree_k0_found() {
        let g = Graph::new(5, [(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        for t in g.nodes() {
            assert!(synthesize_k(&g, t, 0, false).unwrap().is_found());
        }
    }

    #[test]
    fn k5_nok5_family_unsat_and_replays() {
        // v1..v5 = 0..4, t = 4: {v1 t} plus every relabelling of the
        // failure set that cuts v2, v3 off t and v4 off v2, v3
        let g = Graph::complete(5);
        let mut fam = vec![FailureSet::from_pairs([(0, 4)])];
        for (a, b, c) in [(1, 2, 3), (1, 3, 2), (2, 1, 3), (2, 3, 1), (3, 1, 2), (3, 2, 1)] {
            let f = FailureSet::from_pairs([(0, 4), (a, 4), (b, 4), (a, c), (b, c)]);
            if !fam.contains(&f) {
                fam.push(f);
            }
        }
        let cfg = SynthesisConfig::new(FailureFamily::Explicit(fam)).pruning(Pruning::Orbit);
        let r = synthesize(&g, 4, &cfg).unwrap();
        let SynthesisResult::Unsat(cert) = r else { panic!("expected Unsat, got {r:?}") };
        assert!(replay(&cert).unwrap());

        let mut bad = (*cert).clone();
        let root = bad.root.as_mut().unwrap();
        let t = root.refutations_mut().into_iter().next().unwrap();
        t.hops.pop();
        assert!(!replay(&bad).unwrap());

        let mut empty = (*cert).clone();
        empty.root = None;
        assert!(replay(&empty).is_err());
        let mut old = (*cert).clone();
        old.version = "0".into();
        assert!(replay(&old).is_err());
    }

    #[test]
    fn inconclusive_on_tiny_budget() {
        let g = Graph::complete(4);
        let cfg = SynthesisConfig::new(FailureFamily::AllSubsets).node_budget(2);
        assert!(matches!(synthesize(&g, 0, &cfg).unwrap(), SynthesisResult::Inconclusive { .. }));
    }

    #[test]
    fn pruned_and_unpruned_agree_on_small_graphs() {
        for g in crate::corpus::connected_graphs_by_edges(5) {
            for t in [0, g.node_count() - 1] {
                let a = synthesize(&g, t, &SynthesisConfig::new(FailureFamily::AllSubsets)).unwrap();
                let b = synthesize(&g, t, &SynthesisConfig::new(FailureFamily::AllSubsets).pruning(Pruning::Orbit)).unwrap();
                assert_eq!(a.is_found(), b.is_found(), "graph {:?} target {t}", g.edges());
            }
        }
    }
}
