//! Local fast-failover forwarding patterns on undirected graphs.
//!
//! The crate models static forwarding rules that decide an out-port from the
//! in-port and the set of locally failed links, simulates packets under link
//! failures, verifies resilience exhaustively, searches for patterns on small
//! graphs, and transfers patterns along minor operations.

pub mod cli;
pub mod constructions;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod forwarding;
pub mod gadgets;
pub mod graph;
pub mod io;
pub mod minor;
pub mod resilience;
pub mod routing;
pub mod synthesis;
pub mod transforms;

pub use error::{Error, Result};
pub use forwarding::{EvalError, LocalFailures, Pattern, PatternTable, Procedural, SkippingPattern};
pub use graph::{Edge, FailureSet, Graph, NodeId};
pub use resilience::{FailureFamily, ResilienceReport};
pub use routing::{route, route_all_sources, Outcome, RouteTrace};
pub use synthesis::{Pruning, SynthesisConfig, SynthesisResult};
