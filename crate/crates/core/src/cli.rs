//! Command-line front end. Documents go to `-o` or stdout, summaries to
//! stderr.
//!
//! Exit codes: 0 verdict true, Found or Delivered; 1 counterexample, Unsat
//! or a failed delivery; 2 usage, document or limit errors; 3 Inconclusive.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::constructions;
use crate::error::{Error, Result};
use crate::forwarding::Pattern;
use crate::gadgets;
use crate::graph::{Edge, FailureSet, Graph, NodeId};
use crate::io::{certificate_from_json, to_canonical_json, to_dot, trace_from_json, GraphDocument, PatternDocument, SynthesisDocument};
use crate::minor::find_minor;
use crate::resilience::{verify, FailureFamily};
use crate::routing::{route, Outcome, RouteTrace};
use crate::synthesis::{replay, synthesize, Pruning, SynthesisConfig, SynthesisResult, DEFAULT_NODE_BUDGET};
use crate::transforms::{contract_pattern, derive_skipping, minor_steps, minor_transfer, subgraph_transfer, TransferStep};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "failover-lab", version, about = "Local fast-failover forwarding patterns")]
struct Cli {
    /// Worker threads for verification and synthesis.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a named gadget graph with its failure families.
    Gadget {
        name: String,
        /// Padding length for `padded` and `replicated`.
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Number of copies for `replicated`.
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build a pattern with one of the constructive algorithms.
    Construct {
        algo: Algo,
        #[command(flatten)]
        input: GraphInput,
        #[arg(long)]
        tgt: Option<NodeId>,
        #[arg(long)]
        src: Option<NodeId>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Route one packet and print its trace.
    Route {
        #[command(flatten)]
        input: GraphInput,
        #[arg(short, long)]
        pattern: PathBuf,
        /// Failed links, e.g. `0-3,1-2`.
        #[arg(long, value_delimiter = ',')]
        fail: Vec<String>,
        #[arg(long)]
        src: Option<NodeId>,
        #[arg(long)]
        tgt: Option<NodeId>,
        /// Print the trace as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Check delivery under a failure family.
    Verify {
        #[command(flatten)]
        input: GraphInput,
        #[arg(short, long)]
        pattern: PathBuf,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        tgt: Option<NodeId>,
        #[arg(long)]
        src: Option<NodeId>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Search for a pattern or a certificate that none exists.
    Synthesize {
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        source_matching: bool,
        /// Defaults to `orbit` for `--all` and `--family`, `none` for `--k`.
        #[arg(long, value_enum)]
        prune: Option<Prune>,
        #[arg(long)]
        tgt: Option<NodeId>,
        #[arg(long)]
        src: Option<NodeId>,
        /// Maximum search-tree nodes.
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Re-check an Unsat certificate.
    Replay {
        #[arg(short, long)]
        cert: PathBuf,
    },
    /// Carry a pattern over to a minor, or recover a skipping pattern.
    Transform {
        #[command(subcommand)]
        op: TransformOp,
    },
    /// Graphviz rendering with failed links dashed and trace links bold.
    ExportDot {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, value_delimiter = ',')]
        fail: Vec<String>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum TransformOp {
    /// Delete links and nodes.
    Subgraph {
        #[command(flatten)]
        io: TransformIo,
        #[arg(long, value_delimiter = ',')]
        drop_edges: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        drop_nodes: Vec<NodeId>,
    },
    /// Contract one link `i-j`, merging `j` into `i`.
    Contract {
        #[command(flatten)]
        io: TransformIo,
        #[arg(long)]
        edge: String,
    },
    /// Apply a list of steps, or reach a K5 / K3,3 minor.
    Minor {
        #[command(flatten)]
        io: TransformIo,
        /// JSON list of steps.
        #[arg(long, conflicts_with = "minor")]
        steps: Option<PathBuf>,
        #[arg(long, value_enum)]
        minor: Option<MinorName>,
    },
    /// Read a skipping pattern for `-g` off a pattern on its 3-subdivision.
    DeriveSkipping {
        #[command(flatten)]
        input: GraphInput,
        /// Pattern on the 3-subdivision of the graph.
        #[arg(short, long)]
        pattern: PathBuf,
        #[arg(long)]
        tgt: Option<NodeId>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GraphInput {
    /// Graph document, `-` for stdin.
    #[arg(short, long)]
    graph: PathBuf,
    /// Ignore unknown fields in the graph document.
    #[arg(long)]
    permissive: bool,
}

#[derive(Args, Debug)]
struct TransformIo {
    #[command(flatten)]
    input: GraphInput,
    #[arg(short, long)]
    pattern: PathBuf,
    #[arg(long)]
    tgt: Option<NodeId>,
    /// Where to write the transformed graph.
    #[arg(long)]
    out_graph: Option<PathBuf>,
    /// Where to write the transformed pattern.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(multiple = false)]
struct FamilyArgs {
    /// Every failure set (the default).
    #[arg(long)]
    all: bool,
    /// Every failure set of at most K links.
    #[arg(long)]
    k: Option<usize>,
    /// A family stored in the graph document.
    #[arg(long)]
    family: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Algo {
    Outerplanar,
    Sameface,
    TargetRemoval,
    TwoHopSource,
    TwoHopId,
    CounterBounce,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Prune {
    None,
    Orbit,
    OrbitDegree2,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MinorName {
    K5,
    K33,
}

/// Runs the CLI on `argv` (program name first).
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_ERROR;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    if let Some(j) = cli.jobs {
        // the global pool can be built once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    match run(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Error::Document(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Document(format!("{}: {e}", path.display())))
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Document(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::Document(format!("stdout: {e}"))),
    }
}

/// Prefixes a document error with the file it came from.
fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Document(msg) => Error::Document(format!("{}: {msg}", path.display())),
        e => Error::Document(format!("{}: {e}", path.display())),
    }
}

fn load_graph(input: &GraphInput) -> Result<GraphDocument> {
    let text = read_text(&input.graph)?;
    GraphDocument::from_json(&text, input.permissive).map_err(|e| in_file(&input.graph, e))
}

fn load_pattern(path: &Path, g: &Graph) -> Result<Pattern> {
    let text = read_text(path)?;
    PatternDocument::from_json(&text)
        .and_then(|d| d.to_pattern(g))
        .map_err(|e| in_file(path, e))
}

/// Parses `u-v`.
pub fn parse_edge(s: &str) -> Result<Edge> {
    let bad = || Error::Document(format!("link `{s}` is not of the form u-v"));
    let (a, b) = s.trim().split_once('-').ok_or_else(bad)?;
    let u: NodeId = a.trim().parse().map_err(|_| bad())?;
    let v: NodeId = b.trim().parse().map_err(|_| bad())?;
    Ok(Edge::new(u, v))
}

fn parse_failures(g: &Graph, items: &[String]) -> Result<FailureSet> {
    let edges = items.iter().filter(|s| !s.trim().is_empty()).map(|s| parse_edge(s)).collect::<Result<Vec<_>>>()?;
    g.failure_set(edges)
}

fn pick(what: &str, explicit: Option<NodeId>, stored: Option<NodeId>) -> Result<NodeId> {
    explicit.or(stored).ok_or_else(|| Error::Document(format!("no {what}: pass --{what} or store it in the graph")))
}

fn family(doc: &GraphDocument, args: &FamilyArgs) -> Result<FailureFamily> {
    Ok(match (&args.family, args.k) {
        (Some(name), _) => FailureFamily::Explicit(
            doc.families.get(name).cloned().ok_or_else(|| Error::Document(format!("graph has no family `{name}`")))?,
        ),
        (None, Some(k)) => FailureFamily::UpToK(k),
        (None, None) => FailureFamily::AllSubsets,
    })
}

fn trace_text(t: &RouteTrace) -> String {
    let seq: Vec<String> = t.node_sequence().iter().map(|v| v.to_string()).collect();
    let outcome = match t.outcome {
        Outcome::Delivered => "delivered".to_string(),
        Outcome::Loop(k) => format!("loop (state of hop {k} repeats)"),
        Outcome::Dead(r) => format!("dead ({r:?})").to_lowercase(),
        Outcome::NotApplicable => "not applicable (source cut off from target)".to_string(),
    };
    format!("{}\n{outcome}\n", seq.join(" -> "))
}

fn write_transfer(io: &TransformIo, graph: &Graph, p: &Pattern, out: &mut dyn Write) -> Result<i32> {
    if let Some(path) = &io.out_graph {
        emit(&GraphDocument::new(graph.clone()).to_json()?, Some(path), out)?;
    }
    emit(&PatternDocument::from_pattern(p, graph).to_json()?, io.out.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn run(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let note = |err: &mut dyn Write, msg: String| {
        let _ = writeln!(err, "{msg}");
    };
    match cmd {
        Command::Gadget { name, k, r, out: path } => {
            let gd = gadgets::by_name(&name, k, r)?;
            let doc = GraphDocument { graph: gd.graph.clone(), families: gd.families.clone() };
            emit(&doc.to_json()?, path.as_deref(), out)?;
            note(err, format!("{}: {} nodes, {} links", gd.spec.name, gd.spec.nodes, gd.spec.edges));
            Ok(EXIT_OK)
        }
        Command::Construct { algo, input, tgt, src, out: path } => {
            let doc = load_graph(&input)?;
            let g = &doc.graph;
            let tgt = || pick("tgt", tgt, g.target());
            let p = match algo {
                Algo::Outerplanar => Pattern::Skipping(constructions::outerplanar_pattern(g, tgt()?)?),
                Algo::Sameface => {
                    let sf = constructions::sameface_pattern(g, tgt()?, &BTreeMap::new())?;
                    if !sf.not_covered.is_empty() {
                        note(err, format!("sources sharing no face with the target: {:?}", sf.not_covered));
                    }
                    Pattern::Skipping(sf.pattern.expect("built"))
                }
                Algo::TargetRemoval => constructions::target_removal_pattern(g, tgt()?)?,
                Algo::TwoHopSource => constructions::two_hop_source_pattern(g, pick("src", src, g.source())?, tgt()?)?,
                Algo::TwoHopId => constructions::two_hop_id_pattern(g, tgt()?)?,
                Algo::CounterBounce => {
                    if *g != gadgets::counter_fig().graph {
                        return Err(Error::Pattern("counter-bounce is defined on the counter-fig gadget only".into()));
                    }
                    gadgets::counter_bounce_pattern()
                }
            };
            emit(&PatternDocument::from_pattern(&p, g).to_json()?, path.as_deref(), out)?;
            Ok(EXIT_OK)
        }
        Command::Route { input, pattern, fail, src, tgt, json } => {
            let doc = load_graph(&input)?;
            let g = &doc.graph;
            let p = load_pattern(&pattern, g)?;
            let f = parse_failures(g, &fail)?;
            let t = route(g, &f, &p, pick("src", src, g.source())?, pick("tgt", tgt, g.target())?)?;
            if json {
                emit(&to_canonical_json(&t)?, None, out)?;
            } else {
                emit(&trace_text(&t), None, out)?;
            }
            Ok(if t.delivered() { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Verify { input, pattern, family: fam, tgt, src, out: path } => {
            let doc = load_graph(&input)?;
            let g = &doc.graph;
            let p = load_pattern(&pattern, g)?;
            let src = if p.is_source_matching() { Some(pick("src", src, g.source())?) } else { src };
            let report = verify(g, &p, pick("tgt", tgt, g.target())?, &family(&doc, &fam)?, src)?;
            emit(&to_canonical_json(&report)?, path.as_deref(), out)?;
            match &report.counterexample {
                None => note(err, format!("resilient: {} failure sets, {} traces", report.stats.failure_sets, report.stats.traces)),
                Some(c) => note(err, format!("counterexample: F = {}, source {}\n{}", c.failures, c.source, trace_text(&c.trace).trim_end())),
            }
            Ok(if report.verdict { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Synthesize { input, family: fam, source_matching, prune, tgt, src, budget, out: path } => {
            let doc = load_graph(&input)?;
            let g = &doc.graph;
            // orbit conditions only hold for perfectly resilient patterns
            let prune = prune.unwrap_or(if fam.k.is_some() { Prune::None } else { Prune::Orbit });
            let pruning = match prune {
                Prune::None => Pruning::None,
                Prune::Orbit => Pruning::Orbit,
                Prune::OrbitDegree2 => Pruning::OrbitDegree2,
            };
            let config = SynthesisConfig::new(family(&doc, &fam)?)
                .source_matching(source_matching)
                .pruning(pruning)
                .source(src.or(g.source()))
                .node_budget(budget);
            let r = synthesize(g, pick("tgt", tgt, g.target())?, &config)?;
            emit(&to_canonical_json(&SynthesisDocument::new(&r, g))?, path.as_deref(), out)?;
            let s = r.stats();
            let (word, code) = match r {
                SynthesisResult::Found { .. } => ("found", EXIT_OK),
                SynthesisResult::Unsat(_) => ("unsat", EXIT_NEGATIVE),
                SynthesisResult::Inconclusive { .. } => ("inconclusive", EXIT_INCONCLUSIVE),
            };
            note(err, format!("{word}: {} cases, {} search nodes", s.cases, s.search_nodes));
            Ok(code)
        }
        Command::Replay { cert } => {
            let text = read_text(&cert)?;
            let c = match serde_json::from_str::<SynthesisDocument>(&text) {
                Ok(SynthesisDocument::Unsat { certificate }) => *certificate,
                Ok(_) => return Err(Error::Certificate("document holds no certificate".into())),
                Err(_) => certificate_from_json(&text)?,
            };
            let ok = replay(&c)?;
            note(err, if ok { "certificate valid".into() } else { "certificate rejected".into() });
            Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Transform { op } => match op {
            TransformOp::Subgraph { io, drop_edges, drop_nodes } => {
                let doc = load_graph(&io.input)?;
                let g = &doc.graph;
                let p = load_pattern(&io.pattern, g)?;
                let edges = drop_edges.iter().filter(|s| !s.is_empty()).map(|s| parse_edge(s)).collect::<Result<Vec<_>>>()?;
                let t = subgraph_transfer(&p, g, pick("tgt", io.tgt, g.target())?, &edges, &drop_nodes)?;
                write_transfer(&io, &t.graph, &t.pattern, out)
            }
            TransformOp::Contract { io, edge } => {
                let doc = load_graph(&io.input)?;
                let g = &doc.graph;
                let p = load_pattern(&io.pattern, g)?;
                let (i, j) = edge
                    .split_once('-')
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                    .ok_or_else(|| Error::Document(format!("link `{edge}` is not of the form i-j")))?;
                let t = contract_pattern(&p, g, i, j)?;
                write_transfer(&io, &t.graph, &t.pattern, out)
            }
            TransformOp::Minor { io, steps, minor } => {
                let doc = load_graph(&io.input)?;
                let g = &doc.graph;
                let p = load_pattern(&io.pattern, g)?;
                let steps: Vec<TransferStep> = match (steps, minor) {
                    (Some(path), _) => serde_json::from_str(&read_text(&path)?).map_err(|e| Error::Document(format!("{}: {e}", path.display())))?,
                    (None, Some(m)) => {
                        let h = match m {
                            MinorName::K5 => Graph::complete(5),
                            MinorName::K33 => Graph::complete_bipartite(3, 3),
                        };
                        let model = find_minor(g, &h)?.ok_or_else(|| Error::NotSubgraph("graph has no such minor".into()))?;
                        minor_steps(g, &h, &model)?.0
                    }
                    (None, None) => return Err(Error::Document("pass --steps or --minor".into())),
                };
                let t = minor_transfer(&p, g, pick("tgt", io.tgt, g.target())?, &steps)?;
                write_transfer(&io, &t.graph, &t.pattern, out)
            }
            TransformOp::DeriveSkipping { input, pattern, tgt, out: path } => {
                let doc = load_graph(&input)?;
                let g = &doc.graph;
                let (h, _) = g.subdivide3();
                let phi = load_pattern(&pattern, &h)?;
                let d = derive_skipping(&phi, g, pick("tgt", tgt, g.target())?)?;
                if !d.cut.is_empty() {
                    note(err, format!("cut directions: {:?}", d.cut));
                }
                emit(&PatternDocument::from_pattern(&Pattern::Skipping(d.pattern), g).to_json()?, path.as_deref(), out)?;
                Ok(EXIT_OK)
            }
        },
        Command::ExportDot { input, fail, trace, out: path } => {
            let doc = load_graph(&input)?;
            let g = &doc.graph;
            let f = parse_failures(g, &fail)?;
            let t = match trace {
                Some(p) => Some(trace_from_json(&read_text(&p)?)?),
                None => None,
            };
            emit(&to_dot(g, &f, t.as_ref()), path.as_deref(), out)?;
            Ok(EXIT_OK)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_links() {
        assert_eq!(parse_edge("3-1").unwrap(), Edge::new(1, 3));
        assert!(parse_edge("3").is_err());
        assert!(parse_edge("a-b").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(dispatch(["failover-lab", "frobnicate"], &mut o, &mut e), EXIT_ERROR);
        assert_eq!(dispatch(["failover-lab", "gadget", "nope"], &mut o, &mut e), EXIT_ERROR);
        assert_eq!(dispatch(["failover-lab", "--help"], &mut o, &mut e), EXIT_OK);
    }
}
