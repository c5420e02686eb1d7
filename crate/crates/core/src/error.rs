use thiserror::Error;

use crate::topology::Mode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for a network of {node_count} nodes")]
    IndexOutOfRange { index: usize, node_count: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("anti-parallel directed edges between {0} and {1}")]
    AntiParallel(usize, usize),
    #[error("edge list is empty")]
    EmptyEdgeList,
    #[error("network is not a tree")]
    NotATree,
    #[error("network is disconnected")]
    Disconnected,
    #[error("follower {0} is not reachable from the leader along directed edges")]
    LeaderUnreachable(usize),
    #[error("node {0} is the leader, expected a follower")]
    IsLeader(usize),
    #[error("operation requires a {expected:?} network")]
    WrongMode { expected: Mode },
    #[error("invalid generator request: {0}")]
    InvalidGenerator(String),

    #[error("grounded Laplacian is singular (pivot {pivot:e})")]
    Singular { pivot: f64 },
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("kernel does not match the network: {0}")]
    KernelMismatch(String),

    #[error("budget f={f} is invalid for {followers} followers")]
    InvalidBudget { f: usize, followers: usize },
    #[error("placement has {got} nodes, expected {expected}")]
    PlacementSize { expected: usize, got: usize },
    #[error("placement index {index} out of range for {size} followers")]
    PlacementOutOfRange { index: usize, size: usize },
    #[error("placement repeats follower {0}")]
    DuplicatePlacement(usize),
    #[error("invalid payoff scale {0}")]
    InvalidScale(f64),
    #[error("search needs {evaluations} payoff evaluations, above the limit of {limit}")]
    GuardExceeded { evaluations: u128, limit: u128 },
    #[error("cannot split f={f} across parts with total capacity {capacity}")]
    Infeasible { f: usize, capacity: usize },

    #[error("invalid platoon scenario: {0}")]
    InvalidScenario(String),
    #[error("unsupported prediction: {0}")]
    UnsupportedPrediction(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("state diverged at t={time}")]
    Divergence { time: f64 },
    #[error("no steady state reached within horizon {horizon}")]
    NoSteadyState { horizon: f64 },

    #[error("unknown recipe {0:?}")]
    UnknownRecipe(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::GuardExceeded { .. } => 2,
            Error::Invariant(_) => 3,
            _ => 1,
        }
    }
}
