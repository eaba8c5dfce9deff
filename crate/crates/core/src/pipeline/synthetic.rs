//! Seeded synthetic bundles: trend + seasonal + cycle + tones + Gaussian
//! irregular term, a clustered interaction graph with a planted leader
//! coalition, and social features where the coalition's columns lead the
//! target's irregular term by one period.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::bundle::Bundle;
use super::features::{FeatureColumn, FeatureTable, VALENCE_COLUMNS, VOLUME_COLUMNS};
use super::{AtStage, PipelineError, Result};
use crate::leaders::{NodeRecord, SocialGraph};
use crate::seeds;
use crate::series::{Period, TimeSeries};

/// `amplitude * cos(2 pi frequency t + phase)`, frequency in cycles per
/// sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

/// Columns on every platform that carry the leader signal.
pub const LEADER_FEATURES: [&str; 2] = ["num_posts", "avg_sentiment"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub start: Period,
    pub length: usize,
    pub level: f64,
    pub trend_slope: f64,
    pub seasonal_amplitude: f64,
    pub seasonal_period: f64,
    pub cycle_amplitude: f64,
    pub cycle_period: f64,
    pub tones: Vec<Tone>,
    pub noise_sd: f64,
    /// Zero means no graph.
    pub graph_size: usize,
    pub coalition_size: usize,
    /// Zero means an empty feature table.
    pub num_platforms: usize,
    /// Correlation between a leader column at `t` and the irregular term
    /// at `t + 1`, in [0, 1].
    pub leader_signal: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self::planted_leaders()
    }
}

impl SyntheticSpec {
    /// 120 monthly points, 20-node graph with a planted coalition of 3.
    pub fn planted_leaders() -> Self {
        Self {
            start: Period::monthly(2010, 1).expect("valid period"),
            length: 120,
            level: 100.0,
            trend_slope: 0.2,
            seasonal_amplitude: 5.0,
            seasonal_period: 12.0,
            cycle_amplitude: 0.0,
            cycle_period: 60.0,
            tones: Vec::new(),
            noise_sd: 3.0,
            graph_size: 20,
            coalition_size: 3,
            num_platforms: 2,
            leader_signal: 0.95,
        }
    }

    /// Period-12 sine on a linear trend with noise at 1% of the level; no
    /// features and no graph.
    pub fn seasonal_trend() -> Self {
        Self {
            trend_slope: 0.5,
            seasonal_amplitude: 10.0,
            noise_sd: 1.0,
            graph_size: 0,
            coalition_size: 0,
            num_platforms: 0,
            leader_signal: 0.0,
            ..Self::planted_leaders()
        }
    }

    /// Reads a TOML spec; keys left out take the planted-leader values.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        let amps = [self.seasonal_amplitude, self.cycle_amplitude, self.noise_sd].into_iter().chain(self.tones.iter().map(|t| t.amplitude));
        if amps.into_iter().any(|a| !(a >= 0.0 && a.is_finite())) {
            return bad("amplitudes and noise_sd must be finite and >= 0".into());
        }
        if self.length < 2 {
            return bad(format!("length {} is too short", self.length));
        }
        if !(self.seasonal_period > 0.0 && self.cycle_period > 0.0) {
            return bad("periods must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.leader_signal) {
            return bad(format!("leader_signal {} outside [0, 1]", self.leader_signal));
        }
        if self.coalition_size > self.graph_size {
            return bad(format!("coalition of {} exceeds graph of {}", self.coalition_size, self.graph_size));
        }
        if self.graph_size > 0 && (self.coalition_size < 2 || self.graph_size < 2 * self.coalition_size + 4) {
            return bad(format!("a graph of {} nodes cannot host a coalition of {} with followers and a periphery", self.graph_size, self.coalition_size));
        }
        Ok(())
    }

    /// Noise-free target value at step `t`.
    pub fn clean_value(&self, t: usize) -> f64 {
        let t = t as f64;
        let tau = 2.0 * std::f64::consts::PI;
        self.level
            + self.trend_slope * t
            + self.seasonal_amplitude * (tau * t / self.seasonal_period).sin()
            + self.cycle_amplitude * (tau * t / self.cycle_period).sin()
            + self.tones.iter().map(|h| h.amplitude * (tau * h.frequency * t + h.phase).cos()).sum::<f64>()
    }
}

/// Generator ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub coalition: Vec<String>,
    /// Columns driven by the next-period irregular term.
    pub leader_columns: Vec<String>,
    /// Pure-noise columns, attributed to nodes at least three hops from
    /// the coalition.
    pub noise_columns: Vec<String>,
    /// Standardized irregular terms `e_0 .. e_n`; the target at `t` carries
    /// `noise_sd * e_t`, and `e_n` exists so the last feature row has a
    /// lead.
    pub innovations: Vec<f64>,
}

struct PlantedGraph {
    graph: SocialGraph,
    coalition: Vec<String>,
    far: Vec<String>,
}

fn planted_graph(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<PlantedGraph> {
    let n = spec.graph_size;
    let k = spec.coalition_size;
    let periphery = (n / 5).max(3);
    let followers: Vec<usize> = (k..n - periphery).collect();
    let far_nodes: Vec<usize> = (n - periphery + 1..n).collect();

    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    let width = (n - 1).to_string().len();
    let id = |i: usize| format!("u{:0width$}", labels[i]);

    let mut arcs: Vec<(usize, usize, u64)> = Vec::new();
    let mut link = |a: usize, b: usize, ab: u64, ba: u64| {
        arcs.push((a, b, ab));
        arcs.push((b, a, ba));
    };
    for a in 0..k {
        for b in a + 1..k {
            link(a, b, rng.random_range(20..=40), rng.random_range(20..=40));
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (j, &f) in followers.iter().enumerate() {
        let leader = j % k;
        groups[leader].push(f);
        link(leader, f, rng.random_range(3..=8), rng.random_range(5..=12));
    }
    for g in &groups {
        for (x, &a) in g.iter().enumerate() {
            for &b in &g[x + 1..] {
                if rng.random_bool(0.3) {
                    link(a, b, rng.random_range(1..=3), rng.random_range(1..=3));
                }
            }
        }
    }
    // The periphery hangs off one follower through a single gateway node.
    let gateway = n - periphery;
    let bridge = followers[rng.random_range(0..followers.len())];
    link(bridge, gateway, rng.random_range(1..=2), rng.random_range(1..=2));
    link(gateway, far_nodes[0], rng.random_range(1..=3), rng.random_range(1..=3));
    for (x, &a) in far_nodes.iter().enumerate() {
        for &b in &far_nodes[x + 1..] {
            if x == 0 || rng.random_bool(0.5) {
                link(a, b, rng.random_range(1..=3), rng.random_range(1..=3));
            }
        }
    }

    let mut nodes: Vec<(String, NodeRecord)> = (0..n)
        .map(|i| {
            let rec = if i < k {
                NodeRecord {
                    id: id(i),
                    goodwill: rng.random_range(0.8..0.95),
                    power: rng.random_range(0.8..0.95),
                    uprightness: rng.random_range(0.8..0.95),
                    valence: rng.random_range(0.5..0.9),
                }
            } else {
                NodeRecord {
                    id: id(i),
                    goodwill: rng.random_range(0.3..0.7),
                    power: rng.random_range(0.3..0.7),
                    uprightness: rng.random_range(0.3..0.7),
                    valence: rng.random_range(-1.0..1.0),
                }
            };
            (id(i), rec)
        })
        .collect();
    nodes.sort_by(|a, b| a.0.cmp(&b.0));
    let arcs = arcs.into_iter().map(|(a, b, c)| (id(a), id(b), c)).collect();
    let graph = SocialGraph::new(nodes.into_iter().map(|(_, r)| r).collect(), arcs).at("synthetic graph")?;
    let mut coalition: Vec<String> = (0..k).map(id).collect();
    coalition.sort();
    Ok(PlantedGraph { graph, coalition, far: far_nodes.into_iter().map(id).collect() })
}

fn feature_value(feature: &str, signal: f64) -> f64 {
    match feature {
        "avg_sentiment" | "avg_polarity" => (0.2 + 0.15 * signal).clamp(-1.0, 1.0),
        "avg_comment_length" => (80.0 + 10.0 * signal).max(0.0),
        _ => (200.0 + 30.0 * signal).max(0.0),
    }
}

/// Builds a bundle and its ground truth. Separate seed streams drive the
/// irregular term, the graph and the feature noise.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<(Bundle, PlantedTruth)> {
    spec.validate()?;
    let n = spec.length;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, "synthetic/irregular"));
    let innovations: Vec<f64> = (0..=n).map(|_| noise_rng.sample(StandardNormal)).collect();
    let values = (0..n).map(|t| spec.clean_value(t) + spec.noise_sd * innovations[t]).collect();
    let target = TimeSeries::new("target", spec.start, values).at("synthetic target")?;

    let planted = if spec.graph_size > 0 { Some(planted_graph(spec, &mut ChaCha8Rng::seed_from_u64(seeds::derive(seed, "synthetic/graph")))?) } else { None };

    let mut feat_rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, "synthetic/features"));
    let rho = spec.leader_signal;
    let mut columns = Vec::new();
    let mut leader_columns = Vec::new();
    let mut noise_columns = Vec::new();
    for p in 0..spec.num_platforms {
        let platform = format!("p{}", p + 1);
        for feature in VOLUME_COLUMNS.iter().chain(VALENCE_COLUMNS.iter()) {
            let leads = LEADER_FEATURES.contains(feature);
            let values = (0..n)
                .map(|t| {
                    let nu: f64 = feat_rng.sample(StandardNormal);
                    let signal = if leads { rho * innovations[t + 1] + (1.0 - rho * rho).sqrt() * nu } else { nu };
                    feature_value(feature, signal)
                })
                .collect();
            let contributors = match &planted {
                Some(g) if leads => g.coalition.clone(),
                Some(g) => g.far.clone(),
                None => Vec::new(),
            };
            let col = FeatureColumn { platform: platform.clone(), feature: feature.to_string(), values, contributors };
            if leads { &mut leader_columns } else { &mut noise_columns }.push(col.name());
            columns.push(col);
        }
    }
    let features = FeatureTable { start: spec.start, len: n, columns };
    let truth = PlantedTruth {
        coalition: planted.as_ref().map(|g| g.coalition.clone()).unwrap_or_default(),
        leader_columns,
        noise_columns,
        innovations,
    };
    let bundle = Bundle::new(target, features, planted.map(|g| g.graph))?;
    Ok((bundle, truth))
}
