use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{LeaderError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub goodwill: f64,
    pub power: f64,
    pub uprightness: f64,
    pub valence: f64,
}

impl NodeRecord {
    /// Node with neutral attributes: 0.5 reputation components, zero valence.
    pub fn neutral(id: impl Into<String>) -> Self {
        Self { id: id.into(), goodwill: 0.5, power: 0.5, uprightness: 0.5, valence: 0.0 }
    }

    pub fn reputation(&self) -> f64 {
        (self.goodwill + self.power + self.uprightness) / 3.0
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("goodwill", self.goodwill), ("power", self.power), ("uprightness", self.uprightness)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LeaderError::AttributeOutOfRange { id: self.id.clone(), attribute: name, value: v });
            }
        }
        if !(-1.0..=1.0).contains(&self.valence) {
            return Err(LeaderError::AttributeOutOfRange { id: self.id.clone(), attribute: "valence", value: self.valence });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub source: usize,
    pub target: usize,
    pub interaction_count: u64,
}

/// Directed interaction graph. Arcs carry how often `source` interacted
/// with `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    nodes: Vec<NodeRecord>,
    arcs: Vec<Arc>,
    index: HashMap<String, usize>,
    counts: HashMap<(usize, usize), u64>,
}

impl SocialGraph {
    pub fn new(nodes: Vec<NodeRecord>, arcs: Vec<(String, String, u64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            n.validate()?;
            if index.insert(n.id.clone(), i).is_some() {
                return Err(LeaderError::DuplicateNode(n.id.clone()));
            }
        }
        let mut graph = Self { nodes, arcs: Vec::with_capacity(arcs.len()), index, counts: HashMap::new() };
        for (s, t, c) in arcs {
            let source = graph.node_index(&s)?;
            let target = graph.node_index(&t)?;
            graph.push_arc(source, target, c)?;
        }
        Ok(graph)
    }

    /// Builds from node indices directly; node ids are the decimal indices.
    pub fn from_indexed(n: usize, arcs: &[(usize, usize, u64)]) -> Result<Self> {
        let nodes = (0..n).map(|i| NodeRecord::neutral(i.to_string())).collect();
        let arcs = arcs.iter().map(|&(s, t, c)| (s.to_string(), t.to_string(), c)).collect();
        Self::new(nodes, arcs)
    }

    fn push_arc(&mut self, source: usize, target: usize, count: u64) -> Result<()> {
        if source == target {
            return Err(LeaderError::SelfLoop(self.nodes[source].id.clone()));
        }
        if self.counts.insert((source, target), count).is_some() {
            return Err(LeaderError::DuplicateArc(self.nodes[source].id.clone(), self.nodes[target].id.clone()));
        }
        self.arcs.push(Arc { source, target, interaction_count: count });
        Ok(())
    }

    pub fn node_index(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| LeaderError::UnknownNode(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NodeRecord {
        &self.nodes[i]
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn count(&self, source: usize, target: usize) -> u64 {
        self.counts.get(&(source, target)).copied().unwrap_or(0)
    }

    /// Neighbour lists ignoring arc direction and zero-count arcs.
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.len()];
        for a in self.arcs.iter().filter(|a| a.interaction_count > 0) {
            nb[a.source].push(a.target);
            nb[a.target].push(a.source);
        }
        for l in &mut nb {
            l.sort_unstable();
            l.dedup();
        }
        nb
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct NodeRow {
    id: String,
    goodwill: Option<f64>,
    power: Option<f64>,
    uprightness: Option<f64>,
    valence: Option<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
struct EdgeRow {
    source: String,
    target: String,
    interaction_count: u64,
}

fn csv_err(e: csv::Error) -> LeaderError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    LeaderError::Parse { line, msg: e.to_string() }
}

/// Reads `id,goodwill,power,uprightness,valence` and
/// `source,target,interaction_count` tables. Blank attribute cells take
/// the neutral defaults.
pub fn read_graph_csv<R1: Read, R2: Read>(nodes: R1, edges: R2) -> Result<SocialGraph> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(nodes);
    let mut records = Vec::new();
    for (i, row) in rdr.deserialize::<NodeRow>().enumerate() {
        let row = row.map_err(csv_err)?;
        let rec = NodeRecord {
            id: row.id,
            goodwill: row.goodwill.unwrap_or(0.5),
            power: row.power.unwrap_or(0.5),
            uprightness: row.uprightness.unwrap_or(0.5),
            valence: row.valence.unwrap_or(0.0),
        };
        rec.validate().map_err(|e| LeaderError::Parse { line: i + 2, msg: e.to_string() })?;
        records.push(rec);
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(edges);
    let mut arcs = Vec::new();
    for row in rdr.deserialize::<EdgeRow>() {
        let row = row.map_err(csv_err)?;
        arcs.push((row.source, row.target, row.interaction_count));
    }
    SocialGraph::new(records, arcs)
}

pub fn write_graph_csv<W1: Write, W2: Write>(graph: &SocialGraph, nodes: W1, edges: W2) -> Result<()> {
    let mut w = csv::Writer::from_writer(nodes);
    for n in graph.nodes() {
        w.serialize(NodeRow {
            id: n.id.clone(),
            goodwill: Some(n.goodwill),
            power: Some(n.power),
            uprightness: Some(n.uprightness),
            valence: Some(n.valence),
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| LeaderError::Io(e.to_string()))?;
    let mut w = csv::Writer::from_writer(edges);
    for a in graph.arcs() {
        w.serialize(EdgeRow {
            source: graph.node(a.source).id.clone(),
            target: graph.node(a.target).id.clone(),
            interaction_count: a.interaction_count,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| LeaderError::Io(e.to_string()))?;
    Ok(())
}

/// Undirected graph with per-edge weights, stored as sorted adjacency
/// lists. This is what centralities and the coalition game run on.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
}

impl Adjacency {
    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Self {
        let weighted: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
        Self::weighted(n, &weighted)
    }

    /// Duplicate edges keep the larger weight; self-loops are dropped.
    pub fn weighted(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut map: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
        for &(a, b, w) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} nodes");
            if a == b {
                continue;
            }
            for (x, y) in [(a, b), (b, a)] {
                let e = map[x].entry(y).or_insert(w);
                *e = e.max(w);
            }
        }
        let neighbors = map.iter().map(|m| m.keys().copied().collect()).collect();
        let weights = map.iter().map(|m| m.values().copied().collect()).collect();
        Self { neighbors, weights }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|a| self.neighbors[a].iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect()
    }

    /// Breadth-first hop distances from a set of sources.
    pub fn hops_from(&self, sources: &[usize]) -> Vec<Option<usize>> {
        bfs_hops(&self.neighbors, sources)
    }
}

pub(crate) fn bfs_hops(neighbors: &[Vec<usize>], sources: &[usize]) -> Vec<Option<usize>> {
    let mut dist = vec![None; neighbors.len()];
    let mut queue = std::collections::VecDeque::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap() + 1;
        for &u in &neighbors[v] {
            if dist[u].is_none() {
                dist[u] = Some(d);
                queue.push_back(u);
            }
        }
    }
    dist
}
