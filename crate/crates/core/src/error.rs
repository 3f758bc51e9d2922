use thiserror::Error;

use crate::graph::{Edge, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid node id {0}")]
    InvalidNode(NodeId),
    #[error("({0}, {1}) is not an edge of the graph")]
    NotAnEdge(NodeId, NodeId),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge {0}")]
    DuplicateEdge(Edge),
    #[error("invalid rotation at node {node}: {reason}")]
    InvalidRotation { node: NodeId, reason: String },
    #[error("graph has no rotation system")]
    MissingRotation,
    #[error("target and source coincide at node {0}")]
    TargetIsSource(NodeId),
    #[error("node {0} is isolated")]
    Isolated(NodeId),
    #[error("node {0} has degree above 64")]
    DegreeTooLarge(NodeId),
    #[error("size limit exceeded: {what} is {actual}, limit {limit}")]
    LimitExceeded { what: &'static str, actual: usize, limit: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph is not outerplanar under any rotation")]
    NotOuterplanar,
    #[error("target {0} would be removed")]
    TargetRemoved(NodeId),
    #[error("source {0} would be removed")]
    SourceRemoved(NodeId),
    #[error("not a subgraph: {0}")]
    NotSubgraph(String),
    #[error("pattern error: {0}")]
    Pattern(String),
    #[error("derived successor map is not a bijection at node {node}: {witness}")]
    NonBijective { node: NodeId, witness: String },
    #[error("certificate error: {0}")]
    Certificate(String),
    #[error("evaluation failed: {0}")]
    Eval(#[from] crate::forwarding::EvalError),
    #[error("document error: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, Error>;
