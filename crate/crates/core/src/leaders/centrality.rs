use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::graph::Adjacency;

/// Per-node centralities. Degree, betweenness, closeness and eigenvector
/// scores are normalised to `[0, 1]`; eigenvector centrality has unit
/// max-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityVector {
    pub degree: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub closeness: Vec<f64>,
    pub eigenvector: Vec<f64>,
    pub clustering: Vec<f64>,
}

impl CentralityVector {
    pub fn len(&self) -> usize {
        self.degree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degree.is_empty()
    }
}

pub fn compute_centralities(adj: &Adjacency) -> CentralityVector {
    CentralityVector {
        degree: degree_centrality(adj),
        betweenness: betweenness_centrality(adj),
        closeness: closeness_centrality(adj),
        eigenvector: eigenvector_centrality(adj, 1e-10, 100_000),
        clustering: clustering_coefficients(adj),
    }
}

pub fn degree_centrality(adj: &Adjacency) -> Vec<f64> {
    let n = adj.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n).map(|i| adj.degree(i) as f64 / (n - 1) as f64).collect()
}

fn bfs_distances(adj: &Adjacency, s: usize) -> Vec<Option<usize>> {
    adj.hops_from(&[s])
}

/// Closeness over the reachable set, scaled by the reachable fraction so
/// that disconnected graphs stay comparable (Wasserman-Faust). Equals
/// `(n-1) / sum(d)` on connected graphs; isolated nodes score 0.
pub fn closeness_centrality(adj: &Adjacency) -> Vec<f64> {
    let n = adj.len();
    (0..n)
        .map(|s| {
            let dist = bfs_distances(adj, s);
            let (reach, total) = dist.iter().flatten().fold((0usize, 0usize), |(r, t), &d| (r + 1, t + d));
            if total == 0 || n < 2 {
                0.0
            } else {
                let r = (reach - 1) as f64;
                (r / total as f64) * (r / (n - 1) as f64)
            }
        })
        .collect()
}

/// Brandes shortest-path betweenness on the unweighted topology, each
/// unordered pair counted once, normalised by `(n-1)(n-2)/2`.
pub fn betweenness_centrality(adj: &Adjacency) -> Vec<f64> {
    let n = adj.len();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in adj.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    if n <= 2 {
        return vec![0.0; n];
    }
    // Every pair was visited from both ends.
    let norm = ((n - 1) * (n - 2)) as f64;
    bc.iter().map(|b| b / norm).collect()
}

/// Dominant eigenvector of the weighted adjacency by power iteration on
/// `A + I` (the shift leaves eigenvectors unchanged and removes the
/// period-2 oscillation of bipartite graphs). Max-normalised; an edgeless
/// graph scores all zeros.
pub fn eigenvector_centrality(adj: &Adjacency, tol: f64, max_iter: usize) -> Vec<f64> {
    let n = adj.len();
    if adj.num_edges() == 0 {
        return vec![0.0; n];
    }
    let mut x = vec![1.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        for i in 0..n {
            next[i] = x[i] + adj.neighbors(i).iter().zip(adj.weights(i)).map(|(&j, &w)| w * x[j]).sum::<f64>();
        }
        let m = next.iter().copied().fold(0.0, f64::max);
        next.iter_mut().for_each(|v| *v /= m);
        let change = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if change < tol {
            break;
        }
    }
    x
}

/// Local clustering coefficient: closed triangles over possible ones.
pub fn clustering_coefficients(adj: &Adjacency) -> Vec<f64> {
    (0..adj.len())
        .map(|i| {
            let nb = adj.neighbors(i);
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (a, &u) in nb.iter().enumerate() {
                for &v in &nb[a + 1..] {
                    if adj.has_edge(u, v) {
                        links += 1;
                    }
                }
            }
            links as f64 / (k * (k - 1) / 2) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(n: usize) -> Adjacency {
        Adjacency::unweighted(n, &(1..n).map(|i| (0, i)).collect::<Vec<_>>())
    }

    #[test]
    fn triangle_clustering_is_one() {
        let c = compute_centralities(&Adjacency::unweighted(3, &[(0, 1), (1, 2), (0, 2)]));
        assert_eq!(c.clustering, vec![1.0; 3]);
        assert_eq!(c.betweenness, vec![0.0; 3]);
        for e in &c.eigenvector {
            assert!((e - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn star_closed_forms() {
        let c = compute_centralities(&star(5));
        assert_eq!(c.degree[0], 1.0);
        assert_eq!(c.degree[1], 0.25);
        assert!((c.betweenness[0] - 1.0).abs() < 1e-12);
        assert_eq!(c.betweenness[1], 0.0);
        assert_eq!(c.closeness[0], 1.0);
        // Leaf: distances 1 + 2*3 = 7.
        assert!((c.closeness[1] - 4.0 / 7.0).abs() < 1e-12);
        // Leading eigenvector of a star: center 1, leaves 1/sqrt(n-1).
        assert!((c.eigenvector[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn cycle_is_symmetric() {
        let c = compute_centralities(&Adjacency::unweighted(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]));
        for v in [&c.degree, &c.betweenness, &c.closeness, &c.eigenvector, &c.clustering] {
            assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-9), "{v:?}");
        }
    }

    #[test]
    fn isolated_nodes_score_zero() {
        let c = compute_centralities(&Adjacency::unweighted(4, &[(0, 1)]));
        assert_eq!(c.degree[3], 0.0);
        assert_eq!(c.closeness[3], 0.0);
        assert!(c.eigenvector[3] < 1e-9);
        let none = compute_centralities(&Adjacency::unweighted(3, &[]));
        assert_eq!(none.eigenvector, vec![0.0; 3]);
    }
}
