use std::io::Write;

use serde::{Deserialize, Serialize};

use super::graph::{bfs_hops, SocialGraph};
use super::{LeaderError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeWeight {
    pub id: String,
    pub weight: f64,
    /// Hops to the nearest leader; `None` when unreachable.
    pub hops: Option<usize>,
    pub leader: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderWeights {
    pub nodes: Vec<NodeWeight>,
    pub decay_kappa: f64,
    pub max_hops: usize,
}

impl LeaderWeights {
    pub fn get(&self, id: &str) -> Option<&NodeWeight> {
        self.nodes.iter().find(|w| w.id == id)
    }

    pub fn weight(&self, id: &str) -> f64 {
        self.get(id).map_or(0.0, |w| w.weight)
    }
}

/// Signed influence weights that halve (for the default `kappa = ln 2`)
/// with each hop away from the nearest leader and vanish past `max_hops`.
/// The sign follows each node's own valence; zero valence counts as
/// positive.
pub fn assign_weights(graph: &SocialGraph, leaders: &[usize], decay_kappa: f64, max_hops: usize) -> Result<LeaderWeights> {
    if !(decay_kappa > 0.0 && decay_kappa.is_finite()) || max_hops == 0 {
        return Err(LeaderError::InvalidParams(format!("decay_kappa = {decay_kappa} and max_hops = {max_hops} must be positive")));
    }
    if let Some(&bad) = leaders.iter().find(|&&l| l >= graph.len()) {
        return Err(LeaderError::UnknownNode(bad.to_string()));
    }
    let hops = bfs_hops(&graph.undirected_neighbors(), leaders);
    let nodes = graph
        .nodes()
        .iter()
        .zip(hops)
        .map(|(node, h)| {
            let magnitude = match h {
                Some(h) if h <= max_hops => (-decay_kappa * h as f64).exp(),
                _ => 0.0,
            };
            let sign = if node.valence < 0.0 { -1.0 } else { 1.0 };
            NodeWeight { id: node.id.clone(), weight: sign * magnitude, hops: h, leader: h == Some(0) }
        })
        .collect();
    Ok(LeaderWeights { nodes, decay_kappa, max_hops })
}

pub fn write_weights_csv<W: Write>(weights: &LeaderWeights, out: W) -> Result<()> {
    let io = |e: std::io::Error| LeaderError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "weight", "hops"]).map_err(|e| LeaderError::Io(e.to_string()))?;
    for n in &weights.nodes {
        let hops = n.hops.map(|h| h.to_string()).unwrap_or_default();
        w.write_record([n.id.as_str(), &n.weight.to_string(), &hops]).map_err(|e| LeaderError::Io(e.to_string()))?;
    }
    w.flush().map_err(io)
}
