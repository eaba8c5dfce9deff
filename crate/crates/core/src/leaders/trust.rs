use serde::{Deserialize, Serialize};

use super::graph::{Adjacency, SocialGraph};
use super::{LeaderError, Result};

/// Thresholds and combination weights for the three trust modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrustModel {
    /// Direct-trust threshold.
    pub k: f64,
    /// Indirect-trust threshold.
    pub l: f64,
    /// Recommendation-trust threshold.
    pub s: f64,
    pub w_d: f64,
    pub w_i: f64,
    pub w_r: f64,
}

impl Default for TrustModel {
    fn default() -> Self {
        Self { k: 0.5, l: 0.5, s: 0.5, w_d: 0.5, w_i: 0.3, w_r: 0.2 }
    }
}

impl TrustModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k", self.k), ("l", self.l), ("s", self.s)] {
            if !(0.5..1.0).contains(&v) {
                return Err(LeaderError::InvalidParams(format!("threshold {name} = {v} outside [0.5, 1)")));
            }
        }
        let ws = [self.w_d, self.w_i, self.w_r];
        if ws.iter().any(|&w| w < 0.0) || (ws.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(LeaderError::InvalidParams(format!("trust weights {ws:?} must be non-negative and sum to 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTrust {
    pub dt_xy: f64,
    pub idt_xy: f64,
    pub rt_xy: f64,
    pub t_xy: f64,
}

/// Pairwise trust scores plus the undirected trust graph they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustGraph {
    n: usize,
    model: TrustModel,
    dt: Vec<f64>,
    idt: Vec<f64>,
    rt: Vec<f64>,
    trust: Vec<f64>,
    /// Edge weights scale the combined trust by interaction volume so that
    /// eigenvector centrality reflects how intensely a pair interacts.
    pub adjacency: Adjacency,
}

impl TrustGraph {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn model(&self) -> &TrustModel {
        &self.model
    }

    pub fn direct(&self, x: usize, y: usize) -> f64 {
        self.dt[x * self.n + y]
    }

    pub fn indirect(&self, x: usize, y: usize) -> f64 {
        self.idt[x * self.n + y]
    }

    pub fn recommended(&self, x: usize, y: usize) -> f64 {
        self.rt[x * self.n + y]
    }

    /// Combined (symmetric) trust degree.
    pub fn trust(&self, x: usize, y: usize) -> f64 {
        self.trust[x * self.n + y]
    }

    pub fn pair(&self, x: usize, y: usize) -> PairTrust {
        PairTrust { dt_xy: self.direct(x, y), idt_xy: self.indirect(x, y), rt_xy: self.recommended(x, y), t_xy: self.trust(x, y) }
    }

    fn fires(&self, x: usize, y: usize) -> bool {
        let m = &self.model;
        self.direct(x, y) > m.k || self.indirect(x, y) > m.l || self.recommended(x, y) > m.s
    }
}

/// Scores direct, indirect and recommendation trust for every ordered pair
/// and links `{x, y}` whenever any mode clears its threshold in either
/// direction.
///
/// * direct: interaction count normalised by `x`'s busiest out-arc;
/// * indirect: best two-hop max-min path through an intermediary `z`,
///   discounted by `z`'s reputation;
/// * recommendation: mean of `DT(z, y) * r_z` over third parties `z` that
///   directly trust `y` at level `k` or above.
pub fn build_trust_graph(graph: &SocialGraph, model: &TrustModel) -> Result<TrustGraph> {
    model.validate()?;
    let n = graph.len();
    if n == 0 {
        return Err(LeaderError::EmptyGraph);
    }
    let rep: Vec<f64> = graph.nodes().iter().map(|v| v.reputation()).collect();

    let mut dt = vec![0.0; n * n];
    let mut out_max = vec![0u64; n];
    for a in graph.arcs() {
        out_max[a.source] = out_max[a.source].max(a.interaction_count);
    }
    for a in graph.arcs() {
        if out_max[a.source] > 0 {
            dt[a.source * n + a.target] = a.interaction_count as f64 / out_max[a.source] as f64;
        }
    }

    let mut idt = vec![0.0; n * n];
    for x in 0..n {
        for z in 0..n {
            let dxz = dt[x * n + z];
            if z == x || dxz == 0.0 {
                continue;
            }
            for y in 0..n {
                if y == x || y == z {
                    continue;
                }
                let v = dxz.min(dt[z * n + y]) * rep[z];
                if v > idt[x * n + y] {
                    idt[x * n + y] = v;
                }
            }
        }
    }

    // Per target y: sum and count of qualifying recommendations.
    let mut rec_sum = vec![0.0; n];
    let mut rec_cnt = vec![0usize; n];
    for z in 0..n {
        for y in 0..n {
            let d = dt[z * n + y];
            if z != y && d >= model.k {
                rec_sum[y] += d * rep[z];
                rec_cnt[y] += 1;
            }
        }
    }
    let mut rt = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let own = dt[x * n + y];
            let (sum, cnt) = if own >= model.k { (rec_sum[y] - own * rep[x], rec_cnt[y] - 1) } else { (rec_sum[y], rec_cnt[y]) };
            if cnt > 0 {
                rt[x * n + y] = (sum / cnt as f64).max(0.0);
            }
        }
    }

    let mut trust = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            if x != y {
                trust[x * n + y] = model.w_d * (dt[x * n + y] + dt[y * n + x]) / 2.0
                    + model.w_i * (idt[x * n + y] + idt[y * n + x]) / 2.0
                    + model.w_r * (rep[x] + rep[y]) / 2.0;
            }
        }
    }

    let mut tg = TrustGraph { n, model: *model, dt, idt, rt, trust, adjacency: Adjacency::weighted(n, &[]) };
    let mut edges = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            if tg.fires(x, y) || tg.fires(y, x) {
                let volume = (graph.count(x, y) + graph.count(y, x)) as f64;
                edges.push((x, y, tg.trust(x, y) * (1.0 + volume.ln_1p())));
            }
        }
    }
    tg.adjacency = Adjacency::weighted(n, &edges);
    Ok(tg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_arc_direct_trust_is_one() {
        let g = SocialGraph::from_indexed(2, &[(0, 1, 7)]).unwrap();
        let t = build_trust_graph(&g, &TrustModel::default()).unwrap();
        assert_eq!(t.direct(0, 1), 1.0);
        assert_eq!(t.direct(1, 0), 0.0);
        assert!(t.adjacency.has_edge(0, 1));
    }

    #[test]
    fn no_path_means_no_indirect_trust() {
        let g = SocialGraph::from_indexed(4, &[(0, 1, 1), (2, 3, 1)]).unwrap();
        let t = build_trust_graph(&g, &TrustModel::default()).unwrap();
        assert_eq!(t.indirect(0, 3), 0.0);
        assert_eq!(t.indirect(0, 2), 0.0);
    }

    #[test]
    fn uniform_chain_links_only_neighbours() {
        // Hand enumeration: DT = 1 along the chain, IDT(a,c) = 1 * r_b = 0.5,
        // RT(a,c) = mean(0.5, 0.5) = 0.5; neither indirect score clears 0.5.
        let arcs = [(0, 1, 1), (1, 0, 1), (1, 2, 1), (2, 1, 1), (2, 3, 1), (3, 2, 1)];
        let g = SocialGraph::from_indexed(4, &arcs).unwrap();
        let t = build_trust_graph(&g, &TrustModel::default()).unwrap();
        assert_eq!(t.adjacency.edges(), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(t.indirect(0, 2), 0.5);
        assert_eq!(t.recommended(0, 2), 0.5);
        assert_eq!(t.indirect(0, 3), 0.0);
    }

    #[test]
    fn reputable_intermediary_creates_indirect_edge() {
        let mut g = SocialGraph::from_indexed(3, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let mut nodes = g.nodes().to_vec();
        nodes[1].goodwill = 1.0;
        nodes[1].power = 1.0;
        nodes[1].uprightness = 1.0;
        g = SocialGraph::new(nodes, vec![("0".into(), "1".into(), 1), ("1".into(), "2".into(), 1)]).unwrap();
        let t = build_trust_graph(&g, &TrustModel::default()).unwrap();
        assert_eq!(t.indirect(0, 2), 1.0);
        assert!(t.adjacency.has_edge(0, 2));
    }

    #[test]
    fn combined_trust_formula() {
        let g = SocialGraph::from_indexed(2, &[(0, 1, 2), (1, 0, 1)]).unwrap();
        let m = TrustModel::default();
        let t = build_trust_graph(&g, &m).unwrap();
        let expect = 0.5 * (1.0 + 1.0) / 2.0 + 0.3 * 0.0 + 0.2 * 0.5;
        assert!((t.trust(0, 1) - expect).abs() < 1e-15);
        assert_eq!(t.trust(0, 1), t.trust(1, 0));
    }

    #[test]
    fn rejects_bad_model() {
        let g = SocialGraph::from_indexed(2, &[(0, 1, 1)]).unwrap();
        let bad = TrustModel { k: 1.0, ..TrustModel::default() };
        assert!(build_trust_graph(&g, &bad).is_err());
        let bad = TrustModel { w_d: 0.6, ..TrustModel::default() };
        assert!(build_trust_graph(&g, &bad).is_err());
        let empty = SocialGraph::from_indexed(0, &[]).unwrap();
        assert_eq!(build_trust_graph(&empty, &TrustModel::default()).unwrap_err(), LeaderError::EmptyGraph);
    }
}
