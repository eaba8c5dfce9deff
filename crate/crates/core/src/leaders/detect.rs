use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::centrality::{compute_centralities, CentralityVector};
use super::games::{pair_distance, payoff_matrices, DistanceMode, GameParams, Solution};
use super::graph::SocialGraph;
use super::shapley::{shapley_auto, CharacteristicFn, ShapleyResult};
use super::synergy::{coalition_synergy, SynergyParams};
use super::trust::{build_trust_graph, TrustModel};
use super::{LeaderError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Eigenvector-centrality percentile a node must reach to be a candidate.
    pub ec_percentile: f64,
    pub max_size: usize,
    /// Largest pool searched exhaustively; bigger pools use beam search.
    pub exhaustive_limit: usize,
    pub beam_width: usize,
    /// Drop candidates for whom agreement is never a best response.
    pub agreement_filter: bool,
    pub mc_samples: usize,
    pub seed: u64,
    pub distance_mode: DistanceMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            ec_percentile: 50.0,
            max_size: 5,
            exhaustive_limit: 18,
            beam_width: 8,
            agreement_filter: true,
            mc_samples: 20_000,
            seed: 0,
            distance_mode: DistanceMode::Pairwise,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    pub trust: TrustModel,
    pub characteristic: CharacteristicFn,
    pub game: GameParams,
    pub synergy: SynergyParams,
    pub search: SearchConfig,
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        self.trust.validate()?;
        self.game.validate()?;
        self.synergy.validate()?;
        if self.characteristic.neighbor_threshold == 0 {
            return Err(LeaderError::InvalidParams("neighbor threshold must be at least 1".into()));
        }
        let s = &self.search;
        if !(0.0..=100.0).contains(&s.ec_percentile) {
            return Err(LeaderError::InvalidParams(format!("percentile {} outside [0, 100]", s.ec_percentile)));
        }
        if s.max_size < 2 || s.beam_width == 0 || s.mc_samples == 0 {
            return Err(LeaderError::InvalidParams("max_size >= 2, beam_width >= 1 and mc_samples >= 1 required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coalition {
    pub members: Vec<String>,
    pub indices: Vec<usize>,
    pub phi: f64,
    pub sp_sum: f64,
    pub x_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    Beam,
}

/// Everything `detect_leaders` computed along the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub coalition: Coalition,
    pub pool: Vec<String>,
    pub filtered_out: Vec<String>,
    pub distance: f64,
    pub search_mode: SearchMode,
    pub subsets_evaluated: usize,
    pub trust_edges: Vec<(String, String)>,
    pub centralities: CentralityVector,
    pub shapley: ShapleyResult,
    pub warnings: Vec<String>,
    pub config: DetectionConfig,
}

/// Linear-interpolation percentile (`p` in `[0, 100]`).
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

struct Scored {
    members: Vec<usize>,
    phi: f64,
    sp_sum: f64,
}

struct Ranker<'a> {
    ids: &'a [String],
    cent: &'a CentralityVector,
    sp: &'a ShapleyResult,
    params: &'a SynergyParams,
    evaluated: usize,
}

impl Ranker<'_> {
    fn score(&mut self, members: Vec<usize>) -> Scored {
        self.evaluated += 1;
        let phi = coalition_synergy(&members, self.cent, self.sp, self.params).expect("coalitions have at least two members");
        let sp_sum = members.iter().map(|&i| self.sp.sp[i]).sum();
        Scored { members, phi, sp_sum }
    }

    /// `Less` means `a` ranks ahead of `b`.
    fn cmp(&self, a: &Scored, b: &Scored) -> Ordering {
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
        if !close(a.phi, b.phi) {
            return b.phi.total_cmp(&a.phi);
        }
        if !close(a.sp_sum, b.sp_sum) {
            return b.sp_sum.total_cmp(&a.sp_sum);
        }
        let key = |s: &Scored| {
            let mut k: Vec<&str> = s.members.iter().map(|&i| self.ids[i].as_str()).collect();
            k.sort_unstable();
            k
        };
        key(a).cmp(&key(b))
    }
}

fn for_each_subset(pool: &[usize], size: usize, f: &mut impl FnMut(Vec<usize>)) {
    fn rec(pool: &[usize], start: usize, size: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(Vec<usize>)) {
        if cur.len() == size {
            f(cur.clone());
            return;
        }
        for k in start..pool.len() {
            if pool.len() - k < size - cur.len() {
                break;
            }
            cur.push(pool[k]);
            rec(pool, k + 1, size, cur, f);
            cur.pop();
        }
    }
    rec(pool, 0, size, &mut Vec::with_capacity(size), f);
}

/// Trust graph, centralities and Shapley values, then a synergy search over
/// high-centrality candidates that survive the bilateral agreement game.
pub fn detect_leaders(graph: &SocialGraph, config: &DetectionConfig) -> Result<DetectionReport> {
    config.validate()?;
    if graph.is_empty() {
        return Err(LeaderError::EmptyGraph);
    }
    let n = graph.len();
    if n < 2 {
        return Err(LeaderError::EmptyPool);
    }
    let ids: Vec<String> = graph.nodes().iter().map(|v| v.id.clone()).collect();
    let search = &config.search;
    let mut warnings = Vec::new();

    let trust = build_trust_graph(graph, &config.trust)?;
    let cent = compute_centralities(&trust.adjacency);
    let sp = shapley_auto(&trust.adjacency, &config.characteristic, search.mc_samples, search.seed)?;

    let cut = percentile(&cent.eigenvector, search.ec_percentile);
    let mut pool: Vec<usize> = (0..n).filter(|&i| cent.eigenvector[i] >= cut - 1e-12).collect();
    if pool.len() < 2 {
        let found = pool.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| cent.eigenvector[b].total_cmp(&cent.eigenvector[a]).then(ids[a].cmp(&ids[b])));
        pool = order[..2].to_vec();
        pool.sort_unstable();
        let w = format!("percentile filter left {} candidates; using the top two by eigenvector centrality", found);
        log::warn!("{w}");
        warnings.push(w);
    }

    let mut dist_sum = 0.0;
    let mut pairs = 0usize;
    for (a, &i) in pool.iter().enumerate() {
        for &j in &pool[a + 1..] {
            dist_sum += pair_distance(i, j, &cent, config.game.lambda, config.game.rho, search.distance_mode);
            pairs += 1;
        }
    }
    let distance = (dist_sum / pairs as f64).max(1e-6);

    let mut filtered_out = Vec::new();
    if search.agreement_filter {
        let mut agrees = vec![false; n];
        for (a, &i) in pool.iter().enumerate() {
            for &j in &pool[a + 1..] {
                let params = GameParams {
                    d: Some(distance),
                    u_a: trust.trust(i, j).clamp(0.01, 0.99),
                    u_b: trust.trust(j, i).clamp(0.01, 0.99),
                    ..config.game
                };
                let (ai, bj) = payoff_matrices(Solution::S4, &params)?.agreement_is_best_response();
                agrees[i] |= ai;
                agrees[j] |= bj;
            }
        }
        let kept: Vec<usize> = pool.iter().copied().filter(|&i| agrees[i]).collect();
        if kept.len() >= 2 {
            filtered_out = pool.iter().filter(|&&i| !agrees[i]).map(|&i| ids[i].clone()).collect();
            pool = kept;
        } else {
            let w = format!("agreement filter would leave {} candidates; filter skipped", kept.len());
            log::warn!("{w}");
            warnings.push(w);
        }
    }

    let mut ranker = Ranker { ids: &ids, cent: &cent, sp: &sp, params: &config.synergy, evaluated: 0 };
    let max_size = search.max_size.min(pool.len());
    let mut best: Option<Scored> = None;
    let consider = |s: Scored, ranker: &Ranker<'_>, best: &mut Option<Scored>| {
        if best.as_ref().is_none_or(|b| ranker.cmp(&s, b) == Ordering::Less) {
            *best = Some(s);
        }
    };

    let search_mode = if pool.len() <= search.exhaustive_limit {
        for size in 2..=max_size {
            let mut batch = Vec::new();
            for_each_subset(&pool, size, &mut |m| batch.push(m));
            for m in batch {
                let s = ranker.score(m);
                consider(s, &ranker, &mut best);
            }
        }
        SearchMode::Exhaustive
    } else {
        let mut beam: Vec<Scored> = Vec::new();
        for_each_subset(&pool, 2, &mut |m| beam.push(Scored { members: m, phi: 0.0, sp_sum: 0.0 }));
        let mut beam: Vec<Scored> = beam.into_iter().map(|s| ranker.score(s.members)).collect();
        for size in 2..=max_size {
            beam.sort_by(|a, b| ranker.cmp(a, b));
            beam.truncate(search.beam_width);
            if let Some(top) = beam.first() {
                consider(Scored { members: top.members.clone(), phi: top.phi, sp_sum: top.sp_sum }, &ranker, &mut best);
            }
            if size == max_size {
                break;
            }
            let mut grown: Vec<Vec<usize>> = Vec::new();
            for s in &beam {
                for &c in &pool {
                    if !s.members.contains(&c) {
                        let mut m = s.members.clone();
                        m.push(c);
                        m.sort_unstable();
                        if !grown.contains(&m) {
                            grown.push(m);
                        }
                    }
                }
            }
            beam = grown.into_iter().map(|m| ranker.score(m)).collect();
        }
        SearchMode::Beam
    };

    let best = best.ok_or(LeaderError::EmptyPool)?;
    let coalition = Coalition {
        members: best.members.iter().map(|&i| ids[i].clone()).collect(),
        x_size: best.members.len(),
        indices: best.members,
        phi: best.phi,
        sp_sum: best.sp_sum,
    };
    let trust_edges = trust.adjacency.edges().into_iter().map(|(a, b)| (ids[a].clone(), ids[b].clone())).collect();
    Ok(DetectionReport {
        coalition,
        pool: pool.iter().map(|&i| ids[i].clone()).collect(),
        filtered_out,
        distance,
        search_mode,
        subsets_evaluated: ranker.evaluated,
        trust_edges,
        centralities: cent,
        shapley: sp,
        warnings,
        config: config.clone(),
    })
}
