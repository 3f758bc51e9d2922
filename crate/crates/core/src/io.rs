//! JSON documents for graphs, patterns and results, and DOT export.
//!
//! Every document is written with sorted object keys and min-first edges, so
//! saving a loaded document reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::forwarding::{EntryKey, Pattern, PatternTable, Procedural, SkippingPattern};
use crate::graph::{FailureSet, Graph, GraphRepr, NodeId};
use crate::routing::RouteTrace;
use crate::synthesis::{Certificate, SearchStats, SynthesisConfig, SynthesisResult};

/// Serializes `x` as pretty JSON with sorted keys and a trailing newline.
pub fn to_canonical_json<T: Serialize>(x: &T) -> Result<String> {
    let v = serde_json::to_value(x).map_err(|e| Error::Document(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Document(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn parse<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Document(format!("{what}: {e}")))
}

/// A graph with optional named failure families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDocument {
    pub graph: Graph,
    pub families: BTreeMap<String, Vec<FailureSet>>,
}

#[derive(Deserialize)]
struct GraphDocRepr {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
    #[serde(default)]
    rotation: Option<Vec<Vec<NodeId>>>,
    #[serde(default)]
    target: Option<NodeId>,
    #[serde(default)]
    source: Option<NodeId>,
    #[serde(default)]
    families: BTreeMap<String, Vec<FailureSet>>,
}

const GRAPH_FIELDS: [&str; 6] = ["n", "edges", "rotation", "target", "source", "families"];

impl GraphDocument {
    pub fn new(graph: Graph) -> Self {
        Self { graph, families: BTreeMap::new() }
    }

    /// Parses a graph document. Unknown fields are rejected unless
    /// `permissive`, in which case they are ignored.
    pub fn from_json(text: &str, permissive: bool) -> Result<Self> {
        if !permissive {
            let v: Value = parse(text, "graph document")?;
            let obj = v.as_object().ok_or_else(|| Error::Document("graph document: expected an object".into()))?;
            if let Some(k) = obj.keys().find(|k| !GRAPH_FIELDS.contains(&k.as_str())) {
                return Err(Error::Document(format!("graph document: unknown field `{k}`")));
            }
        }
        // parsed from text again so errors keep line and column
        let d: GraphDocRepr = parse(text, "graph document")?;
        let repr = GraphRepr { n: d.n, edges: d.edges, rotation: d.rotation, target: d.target, source: d.source };
        let graph = Graph::try_from(repr)?;
        for (name, fam) in &d.families {
            for f in fam {
                graph
                    .failure_set(f.iter())
                    .map_err(|e| Error::Document(format!("family `{name}`: {e}")))?;
            }
        }
        Ok(Self { graph, families: d.families })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(GraphRepr::from(self.graph.clone())).map_err(|e| Error::Document(e.to_string()))?;
        if !self.families.is_empty() {
            let f = serde_json::to_value(&self.families).map_err(|e| Error::Document(e.to_string()))?;
            v.as_object_mut().expect("object").insert("families".into(), f);
        }
        to_canonical_json(&v)
    }
}

/// One table entry with its local failures spelled out as neighbor ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub node: NodeId,
    #[serde(rename = "in")]
    pub in_port: Option<NodeId>,
    pub failed: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src: Option<NodeId>,
    pub out: NodeId,
}

/// Successor map, start port and blocked ports of one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkipNodeDoc {
    pub node: NodeId,
    /// Pairs `[in, next]`.
    pub next: Vec<(NodeId, NodeId)>,
    pub start: Option<NodeId>,
    #[serde(default)]
    pub blocked: Vec<NodeId>,
}

/// Serialized pattern; reading needs the graph the pattern belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PatternDocument {
    Table { source_matching: bool, entries: Vec<EntryDoc> },
    Skipping { source_matching: bool, nodes: Vec<SkipNodeDoc> },
    Procedural { source_matching: bool, name: String, params: BTreeMap<String, NodeId>, fallback: Option<Vec<SkipNodeDoc>> },
}

fn skipping_doc(p: &SkippingPattern, g: &Graph) -> Vec<SkipNodeDoc> {
    g.nodes()
        .map(|v| SkipNodeDoc {
            node: v,
            next: p.successor_map(g, v).into_iter().collect(),
            start: p.start(g, v),
            blocked: p.blocked(g, v),
        })
        .collect()
}

fn skipping_from_doc(nodes: &[SkipNodeDoc], g: &Graph) -> Result<SkippingPattern> {
    if nodes.len() != g.node_count() || nodes.iter().enumerate().any(|(k, d)| d.node != k) {
        return Err(Error::Document("skipping pattern: expected one entry per node in id order".into()));
    }
    let next: Vec<BTreeMap<NodeId, NodeId>> = nodes.iter().map(|d| d.next.iter().copied().collect()).collect();
    let start: Vec<Option<NodeId>> = nodes.iter().map(|d| d.start).collect();
    let blocked: Vec<Vec<NodeId>> = nodes.iter().map(|d| d.blocked.clone()).collect();
    SkippingPattern::from_maps(g, &next, &start, &blocked)
}

impl PatternDocument {
    pub fn from_pattern(p: &Pattern, g: &Graph) -> Self {
        match p {
            Pattern::Table(t) => PatternDocument::Table {
                source_matching: t.source_matching,
                entries: t
                    .entries
                    .iter()
                    .map(|(k, &out)| EntryDoc {
                        node: k.node,
                        in_port: k.in_port,
                        failed: g.mask_to_failures(k.node, k.mask),
                        src: k.src,
                        out,
                    })
                    .collect(),
            },
            Pattern::Skipping(s) => PatternDocument::Skipping { source_matching: false, nodes: skipping_doc(s, g) },
            Pattern::Procedural(pr) => {
                let (params, fallback): (Vec<(&str, NodeId)>, _) = match pr {
                    Procedural::TargetFirst { target, fallback } => (vec![("target", *target)], Some(skipping_doc(fallback, g))),
                    Procedural::TwoHopSource { source, target } => (vec![("source", *source), ("target", *target)], None),
                    Procedural::TwoHopId { target } => (vec![("target", *target)], None),
                };
                PatternDocument::Procedural {
                    source_matching: p.is_source_matching(),
                    name: pr.name().to_string(),
                    params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                    fallback,
                }
            }
        }
    }

    pub fn to_pattern(&self, g: &Graph) -> Result<Pattern> {
        match self {
            PatternDocument::Table { source_matching, entries } => {
                let mut t = PatternTable::new(*source_matching);
                for e in entries {
                    g.check_node(e.node)?;
                    let key = EntryKey { node: e.node, mask: g.failures_to_mask(e.node, &e.failed)?, in_port: e.in_port, src: e.src };
                    t.insert(g, key, e.out)?;
                }
                Ok(Pattern::Table(t))
            }
            PatternDocument::Skipping { source_matching, nodes } => {
                if *source_matching {
                    return Err(Error::Document("skipping patterns do not match on the source".into()));
                }
                Ok(Pattern::Skipping(skipping_from_doc(nodes, g)?))
            }
            PatternDocument::Procedural { source_matching, name, params, fallback } => {
                let param = |k: &str| -> Result<NodeId> {
                    let v = *params.get(k).ok_or_else(|| Error::Document(format!("procedural `{name}`: missing param `{k}`")))?;
                    g.check_node(v)?;
                    Ok(v)
                };
                let pr = match name.as_str() {
                    "target-first" => {
                        let fb = fallback.as_ref().ok_or_else(|| Error::Document("procedural `target-first`: missing fallback".into()))?;
                        Procedural::TargetFirst { target: param("target")?, fallback: skipping_from_doc(fb, g)? }
                    }
                    "two-hop-source" => Procedural::TwoHopSource { source: param("source")?, target: param("target")? },
                    "two-hop-id" => Procedural::TwoHopId { target: param("target")? },
                    other => return Err(Error::Document(format!("unknown procedural pattern `{other}`"))),
                };
                let p = Pattern::Procedural(pr);
                if p.is_source_matching() != *source_matching {
                    return Err(Error::Document(format!("procedural `{name}`: wrong source_matching flag")));
                }
                Ok(p)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse(text, "pattern document")
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }
}

/// Synthesis outcome as written by the CLI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SynthesisDocument {
    Found { pattern: PatternDocument, stats: SearchStats, config: SynthesisConfig },
    Unsat { certificate: Box<Certificate> },
    Inconclusive { stats: SearchStats, config: SynthesisConfig },
}

impl SynthesisDocument {
    pub fn new(r: &SynthesisResult, g: &Graph) -> Self {
        match r {
            SynthesisResult::Found { table, stats, config } => SynthesisDocument::Found {
                pattern: PatternDocument::from_pattern(&Pattern::Table(table.clone()), g),
                stats: *stats,
                config: config.clone(),
            },
            SynthesisResult::Unsat(c) => SynthesisDocument::Unsat { certificate: c.clone() },
            SynthesisResult::Inconclusive { stats, config } => SynthesisDocument::Inconclusive { stats: *stats, config: config.clone() },
        }
    }
}

pub fn certificate_from_json(text: &str) -> Result<Certificate> {
    parse(text, "certificate")
}

pub fn trace_from_json(text: &str) -> Result<RouteTrace> {
    parse(text, "trace")
}

/// Graphviz rendering: failed links dashed, links used by `trace` bold, the
/// target doubly circled.
pub fn to_dot(g: &Graph, failed: &FailureSet, trace: Option<&RouteTrace>) -> String {
    let used: std::collections::BTreeSet<_> = trace
        .map(|t| t.hops.iter().map(|h| crate::graph::Edge::new(h.node, h.out_port)).collect())
        .unwrap_or_default();
    let mut s = String::from("graph G {\n");
    for v in g.nodes() {
        let mut attrs = Vec::new();
        if g.target() == Some(v) || trace.is_some_and(|t| t.target == v) {
            attrs.push("shape=doublecircle");
        }
        if g.source() == Some(v) || trace.is_some_and(|t| t.source == v) {
            attrs.push("shape=box");
        }
        if attrs.is_empty() {
            let _ = writeln!(s, "  {v};");
        } else {
            let _ = writeln!(s, "  {v} [{}];", attrs.join(","));
        }
    }
    for &e in g.edges() {
        let mut attrs = Vec::new();
        if failed.contains(e) {
            attrs.push("style=dashed");
        }
        if used.contains(&e) {
            attrs.push("penwidth=3");
        }
        if attrs.is_empty() {
            let _ = writeln!(s, "  {} -- {};", e.0, e.1);
        } else {
            let _ = writeln!(s, "  {} -- {} [{}];", e.0, e.1, attrs.join(","));
        }
    }
    s.push_str("}\n");
    s
}
