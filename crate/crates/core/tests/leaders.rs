use hybridcast::leaders::centrality::compute_centralities;
use hybridcast::leaders::detect::percentile;
use hybridcast::leaders::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shapley values by averaging marginals over every one of the n! orders.
fn brute_force_shapley(adj: &Adjacency, x: usize) -> Vec<f64> {
    let n = adj.len();
    let value = |members: &[usize]| -> f64 {
        members.iter().filter(|&&m| adj.neighbors(m).iter().filter(|u| members.contains(u)).count() >= x).count() as f64
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = vec![0.0; n];
    let mut count = 0usize;
    permute(&mut perm, 0, &mut |p| {
        count += 1;
        for k in 0..n {
            total[p[k]] += value(&p[..=k]) - value(&p[..k]);
        }
    });
    total.iter().map(|t| t / count as f64).collect()
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Adjacency {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Adjacency::unweighted(n, &edges)
}

#[test]
fn exact_shapley_matches_permutation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..25 {
        let n = rng.random_range(1..=6);
        let adj = random_graph(&mut rng, n, 0.5);
        for x in [1, 2] {
            let f = CharacteristicFn::new(x).unwrap();
            let exact = shapley_exact(&adj, &f).unwrap();
            let oracle = brute_force_shapley(&adj, x);
            for (a, b) in exact.sp.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
            let all: Vec<usize> = (0..n).collect();
            assert!((exact.total() - characteristic_value(&all, &adj, &f) as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn monte_carlo_converges_to_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let adj = random_graph(&mut rng, 8, 0.45);
    let f = CharacteristicFn::new(2).unwrap();
    let exact = shapley_exact(&adj, &f).unwrap();
    let err = |samples| {
        let mc = shapley_monte_carlo(&adj, &f, samples, 3).unwrap();
        mc.sp.iter().zip(&exact.sp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let (small, big) = (err(5_000), err(200_000));
    assert!(err(50_000) < 0.02);
    assert!(big < small, "{big} !< {small}");
}

#[test]
fn shapley_symmetry_on_automorphic_nodes() {
    // Leaves of a star are interchangeable.
    let adj = Adjacency::unweighted(5, &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (3, 4)]);
    let sp = shapley_exact(&adj, &CharacteristicFn::new(2).unwrap()).unwrap().sp;
    for k in 2..5 {
        assert!((sp[k] - sp[1]).abs() < 1e-12);
    }
}

/// All shortest paths between every pair by exhaustive simple-path search.
fn brute_betweenness(adj: &Adjacency) -> Vec<f64> {
    let n = adj.len();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(p) = stack.pop() {
                let last = *p.last().unwrap();
                if last == t {
                    paths.push(p);
                    continue;
                }
                for &u in adj.neighbors(last) {
                    if !p.contains(&u) {
                        let mut q = p.clone();
                        q.push(u);
                        stack.push(q);
                    }
                }
            }
            let Some(shortest) = paths.iter().map(Vec::len).min() else { continue };
            let best: Vec<_> = paths.iter().filter(|p| p.len() == shortest).collect();
            for v in 0..n {
                if v != s && v != t {
                    bc[v] += best.iter().filter(|p| p.contains(&v)).count() as f64 / best.len() as f64;
                }
            }
        }
    }
    let norm = ((n - 1) * (n - 2)) as f64 / 2.0;
    bc.iter().map(|b| b / norm).collect()
}

#[test]
fn centralities_match_closed_forms_and_brute_force() {
    // Path 0-1-2-3-4.
    let path = Adjacency::unweighted(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
    let c = compute_centralities(&path);
    // Middle node lies on 2*2 of the 6 pairs not involving it.
    assert!((c.betweenness[2] - 4.0 / 6.0).abs() < 1e-12);
    assert!((c.closeness[0] - 4.0 / 10.0).abs() < 1e-12);
    assert!((c.closeness[2] - 4.0 / 6.0).abs() < 1e-12);
    assert_eq!(c.degree[0], 0.25);

    let k5 = compute_centralities(&Adjacency::unweighted(5, &(0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect::<Vec<_>>()));
    for i in 0..5 {
        assert_eq!(k5.degree[i], 1.0);
        assert_eq!(k5.betweenness[i], 0.0);
        assert_eq!(k5.closeness[i], 1.0);
        assert_eq!(k5.clustering[i], 1.0);
        assert!((k5.eigenvector[i] - 1.0).abs() < 1e-9);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let adj = random_graph(&mut rng, 7, 0.4);
        let fast = compute_centralities(&adj).betweenness;
        for (a, b) in fast.iter().zip(brute_betweenness(&adj)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn star_pair_distance_from_closed_forms() {
    let c = compute_centralities(&Adjacency::unweighted(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]));
    // Center: sqrt(1 * 1 / 1) = 1; leaf: BC = 0; no triangles anywhere.
    let d = pair_distance(0, 3, &c, 0.3, 0.2, DistanceMode::Pairwise);
    assert!((d - 1.0).abs() < 1e-12);
}

fn dyadic(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    // Multiples of 2^-10 keep every sum in the payoff tables exact.
    let steps = ((hi - lo) * 1024.0) as u32;
    lo + rng.random_range(1..steps) as f64 / 1024.0
}

#[test]
fn payoff_matrix_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let d = [0.25, 0.5, 1.0, 2.0, 4.0][rng.random_range(0..5)];
        let p = GameParams {
            x_pay: dyadic(&mut rng, 0.0, 8.0),
            y_pay: dyadic(&mut rng, 0.0, 8.0),
            i_pay: dyadic(&mut rng, 0.0, 8.0),
            d: Some(d),
            u_a: dyadic(&mut rng, 0.0, 1.0),
            u_b: dyadic(&mut rng, 0.0, 1.0),
            ..GameParams::default()
        };
        for s in Solution::ALL {
            let m = payoff_matrices(s, &p).unwrap();
            let k = m.actions.len();
            for r in 0..k {
                for c in 0..k {
                    assert_eq!(m.m_b[r][c], m.m_a[c][r]);
                    let sum = m.m_a[r][c] + m.m_b[r][c];
                    match s {
                        Solution::S1 | Solution::S2 => assert_eq!(sum, 0.0),
                        Solution::S3 => {
                            let agree = [r, c].iter().filter(|&&a| m.actions[a] == Action::Agreement).count();
                            assert_eq!(sum, 2.0 / d * agree as f64);
                        }
                        Solution::S4 => {}
                    }
                }
            }
        }
        let same = GameParams { u_b: p.u_a, ..p };
        let m = payoff_matrices(Solution::S4, &same).unwrap();
        assert_eq!(m.m_a[0][0], 0.0);
        assert_eq!(m.m_a[1][1], 0.0);
        assert_eq!(m.m_a[2][2], 2.0 / d);
    }
}

#[test]
fn s3_sum_rule_holds_to_rounding_for_general_floats() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let d = rng.random_range(0.05..5.0);
        let p = GameParams {
            x_pay: rng.random_range(0.01..5.0),
            y_pay: rng.random_range(0.01..5.0),
            i_pay: rng.random_range(0.01..5.0),
            d: Some(d),
            ..GameParams::default()
        };
        let m = payoff_matrices(Solution::S3, &p).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let agree = usize::from(r == 2) + usize::from(c == 2);
                let sum = m.m_a[r][c] + m.m_b[r][c];
                assert!((sum - 2.0 / d * agree as f64).abs() < 1e-12 * (1.0 + 2.0 / d + p.x_pay + p.y_pay + p.i_pay));
            }
        }
    }
}

#[test]
fn opinion_gap_recurrence() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let mu = rng.random_range(0.01..0.49);
        let eta = rng.random_range(0.01..0.49);
        let t = rng.random_range(0..=50);
        let (mut a, mut b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let gap0: f64 = b - a;
        for _ in 0..t {
            (a, b) = opinion_step(a, b, mu, eta);
        }
        let expect = (1.0 + eta - mu).powi(t) * gap0;
        // Absolute for small gaps (cancellation in b - a), relative for large.
        assert!(((b - a) - expect).abs() <= 1e-12 * expect.abs().max(1.0), "{} vs {expect}", b - a);
    }
}

#[test]
fn synergy_symmetry_and_linearity() {
    let adj = Adjacency::unweighted(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]);
    let c = compute_centralities(&adj);
    let sp = shapley_exact(&adj, &CharacteristicFn::new(1).unwrap()).unwrap();
    let p = SynergyParams { delta: 0.5, partial: 0.7, c: 0.8 };
    assert_eq!(pair_synergy(1, 3, &c, &sp, &p), pair_synergy(3, 1, &c, &sp, &p));
    let a = coalition_synergy(&[0, 2, 3], &c, &sp, &p).unwrap();
    let b = coalition_synergy(&[3, 0, 2], &c, &sp, &p).unwrap();
    assert!((a - b).abs() < 1e-15);
    let doubled = coalition_synergy(&[0, 2, 3], &c, &sp, &SynergyParams { delta: 1.0, ..p }).unwrap();
    assert!((doubled - 2.0 * a).abs() < 1e-15);
}

fn two_triangles() -> SocialGraph {
    let mut arcs = Vec::new();
    for (base, count) in [(0, 10), (3, 1)] {
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    arcs.push((base + a, base + b, count));
                }
            }
        }
    }
    SocialGraph::from_indexed(6, &arcs).unwrap()
}

/// Every subset of the pool, scored from scratch.
fn exhaustive_best(report: &DetectionReport, graph: &SocialGraph, cfg: &DetectionConfig) -> (f64, Vec<usize>) {
    let pool: Vec<usize> = report.pool.iter().map(|id| graph.node_index(id).unwrap()).collect();
    let (cent, sp) = (&report.centralities, &report.shapley.sp);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for mask in 1u32..(1 << pool.len()) {
        let members: Vec<usize> = (0..pool.len()).filter(|k| mask >> k & 1 == 1).map(|k| pool[k]).collect();
        let x = members.len();
        if !(2..=cfg.search.max_size).contains(&x) {
            continue;
        }
        let mut phi = 0.0;
        for a in 0..x {
            for b in a + 1..x {
                let (i, j) = (members[a], members[b]);
                let omega = (cent.eigenvector[i] + cent.eigenvector[j]) / 2.0 * cfg.synergy.partial * (sp[i] + sp[j]) / 2.0;
                phi += cfg.synergy.delta * (omega / x as f64).max(0.0).powf(cfg.synergy.c);
            }
        }
        if phi > best.0 + 1e-12 {
            best = (phi, members);
        }
    }
    best
}

#[test]
fn denser_triangle_wins() {
    let g = two_triangles();
    let cfg = DetectionConfig::default();
    let r = detect_leaders(&g, &cfg).unwrap();
    assert!(r.coalition.indices.iter().all(|&i| i < 3), "{:?}", r.coalition);
    let (phi, _) = exhaustive_best(&r, &g, &cfg);
    assert!((r.coalition.phi - phi).abs() < 1e-12);
}

fn fig1c_like() -> SocialGraph {
    let nodes: Vec<NodeRecord> = (1..=16).map(|i| NodeRecord::neutral(format!("v{i}"))).collect();
    let mut arcs = Vec::new();
    let mut link = |a: usize, b: usize, w: u64| {
        arcs.push((format!("v{a}"), format!("v{b}"), w));
        arcs.push((format!("v{b}"), format!("v{a}"), w));
    };
    // Three communities around hubs 2, 7 and 11, stitched through 5, 8, 14.
    for leaf in [1, 3, 4, 5] {
        link(2, leaf, 4);
    }
    for leaf in [6, 8, 9, 10] {
        link(7, leaf, 4);
    }
    for leaf in [12, 13, 14, 15, 16] {
        link(11, leaf, 4);
    }
    link(1, 3, 1);
    link(9, 10, 1);
    link(12, 13, 1);
    link(15, 16, 1);
    link(2, 7, 6);
    link(7, 11, 6);
    link(2, 11, 6);
    link(5, 8, 3);
    link(8, 14, 3);
    link(5, 14, 3);
    SocialGraph::new(nodes, arcs).unwrap()
}

#[test]
fn fig1c_like_graph_selects_hub_nodes() {
    let g = fig1c_like();
    let cfg = DetectionConfig::default();
    let r = detect_leaders(&g, &cfg).unwrap();
    let hubs = ["v2", "v5", "v7", "v8", "v11", "v14"];
    assert!(r.coalition.members.iter().all(|m| hubs.contains(&m.as_str())), "{:?}", r.coalition.members);
    let (phi, _) = exhaustive_best(&r, &g, &cfg);
    assert!((r.coalition.phi - phi).abs() < 1e-12);
    // Determinism.
    assert_eq!(detect_leaders(&g, &cfg).unwrap(), r);
}

#[test]
fn beam_search_runs_on_large_pools() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut arcs = Vec::new();
    for a in 0..40usize {
        for b in 0..40usize {
            if a != b && rng.random_bool(0.15) {
                arcs.push((a, b, rng.random_range(1..20)));
            }
        }
    }
    let g = SocialGraph::from_indexed(40, &arcs).unwrap();
    let cfg = DetectionConfig { search: SearchConfig { mc_samples: 2000, ..SearchConfig::default() }, ..DetectionConfig::default() };
    let r = detect_leaders(&g, &cfg).unwrap();
    assert_eq!(r.search_mode, hybridcast::leaders::detect::SearchMode::Beam);
    assert!((2..=5).contains(&r.coalition.x_size));
    assert_eq!(detect_leaders(&g, &cfg).unwrap().coalition, r.coalition);
}

#[test]
fn weights_decay_monotonically_from_leaders() {
    let g = fig1c_like();
    let r = detect_leaders(&g, &DetectionConfig::default()).unwrap();
    let w = assign_weights(&g, &r.coalition.indices, std::f64::consts::LN_2, 3).unwrap();
    let top = w.nodes.iter().map(|n| n.weight.abs()).fold(0.0, f64::max);
    for n in &w.nodes {
        if n.weight.abs() == top {
            assert!(n.leader);
        }
    }
    for a in &w.nodes {
        for b in &w.nodes {
            if let (Some(ha), Some(hb)) = (a.hops, b.hops) {
                if ha < hb {
                    assert!(a.weight.abs() >= b.weight.abs());
                }
            }
        }
    }
}

#[test]
fn percentile_matches_definition() {
    assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0, 5.0], 50.0), 3.0);
    assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 25.0), 1.75);
}

#[test]
fn graph_csv_round_trip() {
    let g = fig1c_like();
    let (mut nodes, mut edges) = (Vec::new(), Vec::new());
    write_graph_csv(&g, &mut nodes, &mut edges).unwrap();
    let back = read_graph_csv(nodes.as_slice(), edges.as_slice()).unwrap();
    assert_eq!(back, g);
}
