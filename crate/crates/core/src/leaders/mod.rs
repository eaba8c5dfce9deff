//! Opinion-leader detection: trust graph, centralities, Shapley values,
//! bilateral opinion games, coalition synergy and influence weights.

use thiserror::Error;

pub mod centrality;
pub mod detect;
pub mod games;
pub mod graph;
pub mod shapley;
pub mod synergy;
pub mod trust;
pub mod weights;

pub use centrality::{compute_centralities, CentralityVector};
pub use detect::{detect_leaders, Coalition, DetectionConfig, DetectionReport, SearchConfig};
pub use games::{opinion_step, pair_distance, payoff_matrices, Action, DistanceMode, GameParams, PayoffMatrices, Solution};
pub use graph::{read_graph_csv, write_graph_csv, Adjacency, Arc, NodeRecord, SocialGraph};
pub use shapley::{characteristic_value, shapley_exact, shapley_monte_carlo, CharacteristicFn, ShapleyMode, ShapleyResult};
pub use synergy::{coalition_synergy, pair_synergy, SynergyParams};
pub use trust::{build_trust_graph, PairTrust, TrustGraph, TrustModel};
pub use weights::{assign_weights, write_weights_csv, LeaderWeights, NodeWeight};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LeaderError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("self-loop on node {0}")]
    SelfLoop(String),
    #[error("duplicate arc {0} -> {1}")]
    DuplicateArc(String, String),
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("node {id}: {attribute} = {value} out of range")]
    AttributeOutOfRange { id: String, attribute: &'static str, value: f64 },
    #[error("exact Shapley limited to {limit} players, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("solution {0} needs a positive distance d")]
    MissingDistance(&'static str),
    #[error("coalition synergy needs at least two members, got {0}")]
    TooSmall(usize),
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LeaderError>;
