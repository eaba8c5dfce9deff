use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::Adjacency;
use super::{LeaderError, Result};

/// Largest player count for which `shapley_exact` enumerates subsets.
pub const EXACT_LIMIT: usize = 12;

/// Coalition value: the number of members with at least `neighbor_threshold`
/// neighbours inside the coalition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharacteristicFn {
    pub neighbor_threshold: usize,
}

impl Default for CharacteristicFn {
    fn default() -> Self {
        Self { neighbor_threshold: 2 }
    }
}

impl CharacteristicFn {
    pub fn new(neighbor_threshold: usize) -> Result<Self> {
        if neighbor_threshold == 0 {
            return Err(LeaderError::InvalidParams("neighbor threshold must be at least 1".into()));
        }
        Ok(Self { neighbor_threshold })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapleyMode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyResult {
    /// Shapley value per node index.
    pub sp: Vec<f64>,
    /// Per-node standard error of the estimate (Monte Carlo only).
    pub std_err: Option<Vec<f64>>,
    pub mode: ShapleyMode,
    pub num_samples: Option<usize>,
    pub seed: Option<u64>,
}

impl ShapleyResult {
    pub fn total(&self) -> f64 {
        self.sp.iter().sum()
    }
}

pub fn characteristic_value(coalition: &[usize], adj: &Adjacency, f: &CharacteristicFn) -> usize {
    let mut inside = vec![false; adj.len()];
    for &c in coalition {
        inside[c] = true;
    }
    coalition
        .iter()
        .filter(|&&c| adj.neighbors(c).iter().filter(|&&u| inside[u]).count() >= f.neighbor_threshold)
        .count()
}

fn value_mask(mask: u32, nbr_masks: &[u32], x: u32) -> u32 {
    let mut v = 0;
    let mut m = mask;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        m &= m - 1;
        if (nbr_masks[i] & mask).count_ones() >= x {
            v += 1;
        }
    }
    v
}

/// Exact Shapley values by enumerating every subset once and weighting
/// marginal contributions by `|C|! (n-|C|-1)! / n!`.
pub fn shapley_exact(adj: &Adjacency, f: &CharacteristicFn) -> Result<ShapleyResult> {
    let n = adj.len();
    if n > EXACT_LIMIT {
        return Err(LeaderError::TooLarge { n, limit: EXACT_LIMIT });
    }
    let nbr_masks: Vec<u32> = (0..n).map(|i| adj.neighbors(i).iter().fold(0u32, |m, &j| m | (1 << j))).collect();
    let x = f.neighbor_threshold as u32;
    let values: Vec<f64> = (0..1u32 << n).map(|m| value_mask(m, &nbr_masks, x) as f64).collect();

    let mut fact = vec![1.0f64; n + 1];
    for k in 1..=n {
        fact[k] = fact[k - 1] * k as f64;
    }
    let weight: Vec<f64> = (0..n).map(|s| fact[s] * fact[n - s - 1] / fact[n]).collect();

    let mut sp = vec![0.0; n];
    for mask in 0..values.len() as u32 {
        let size = mask.count_ones() as usize;
        if size == n {
            continue;
        }
        for (i, s) in sp.iter_mut().enumerate() {
            let bit = 1u32 << i;
            if mask & bit == 0 {
                *s += weight[size] * (values[(mask | bit) as usize] - values[mask as usize]);
            }
        }
    }
    Ok(ShapleyResult { sp, std_err: None, mode: ShapleyMode::Exact, num_samples: None, seed: None })
}

/// Permutation-sampling estimate. Each sampled order contributes one
/// marginal per player, computed incrementally as players join.
pub fn shapley_monte_carlo(adj: &Adjacency, f: &CharacteristicFn, num_samples: usize, seed: u64) -> Result<ShapleyResult> {
    if num_samples == 0 {
        return Err(LeaderError::InvalidParams("num_samples must be at least 1".into()));
    }
    let n = adj.len();
    let x = f.neighbor_threshold;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut sum = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n];
    let mut inside = vec![false; n];
    let mut cnt = vec![0usize; n];

    for _ in 0..num_samples {
        order.shuffle(&mut rng);
        inside.iter_mut().for_each(|b| *b = false);
        cnt.iter_mut().for_each(|c| *c = 0);
        for &p in &order {
            let mut marginal = usize::from(cnt[p] >= x);
            for &q in adj.neighbors(p) {
                cnt[q] += 1;
                if inside[q] && cnt[q] == x {
                    marginal += 1;
                }
            }
            inside[p] = true;
            let m = marginal as f64;
            sum[p] += m;
            sum_sq[p] += m * m;
        }
    }
    let ns = num_samples as f64;
    let sp: Vec<f64> = sum.iter().map(|s| s / ns).collect();
    let std_err = sp
        .iter()
        .zip(&sum_sq)
        .map(|(&mean, &sq)| {
            if num_samples < 2 {
                return 0.0;
            }
            let var = ((sq - ns * mean * mean) / (ns - 1.0)).max(0.0);
            (var / ns).sqrt()
        })
        .collect();
    Ok(ShapleyResult { sp, std_err: Some(std_err), mode: ShapleyMode::MonteCarlo, num_samples: Some(num_samples), seed: Some(seed) })
}

/// Exact when the graph is small enough, Monte Carlo otherwise.
pub fn shapley_auto(adj: &Adjacency, f: &CharacteristicFn, num_samples: usize, seed: u64) -> Result<ShapleyResult> {
    if adj.len() <= EXACT_LIMIT {
        shapley_exact(adj, f)
    } else {
        shapley_monte_carlo(adj, f, num_samples, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Adjacency {
        Adjacency::unweighted(3, &[(0, 1), (1, 2), (0, 2)])
    }

    #[test]
    fn characteristic_examples() {
        let one = CharacteristicFn::new(1).unwrap();
        assert_eq!(characteristic_value(&[], &triangle(), &one), 0);
        assert_eq!(characteristic_value(&[0, 1, 2], &triangle(), &one), 3);
        assert_eq!(characteristic_value(&[1], &triangle(), &one), 0);
        assert!(CharacteristicFn::new(0).is_err());
    }

    #[test]
    fn triangle_exact_is_one_each() {
        let r = shapley_exact(&triangle(), &CharacteristicFn::new(1).unwrap()).unwrap();
        for s in &r.sp {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_and_singleton_are_null() {
        let adj = Adjacency::unweighted(4, &[(0, 1), (1, 2), (0, 2)]);
        let r = shapley_exact(&adj, &CharacteristicFn::new(1).unwrap()).unwrap();
        assert_eq!(r.sp[3], 0.0);
        let single = shapley_exact(&Adjacency::unweighted(1, &[]), &CharacteristicFn::new(1).unwrap()).unwrap();
        assert_eq!(single.sp, vec![0.0]);
    }

    #[test]
    fn too_large_rejected() {
        let adj = Adjacency::unweighted(13, &[]);
        assert_eq!(
            shapley_exact(&adj, &CharacteristicFn::default()).unwrap_err(),
            LeaderError::TooLarge { n: 13, limit: EXACT_LIMIT }
        );
    }

    #[test]
    fn monte_carlo_is_deterministic_and_close() {
        let f = CharacteristicFn::new(1).unwrap();
        let a = shapley_monte_carlo(&triangle(), &f, 50_000, 7).unwrap();
        let b = shapley_monte_carlo(&triangle(), &f, 50_000, 7).unwrap();
        assert_eq!(a, b);
        for s in &a.sp {
            assert!((s - 1.0).abs() < 0.02);
        }
        // Every permutation sums to v(N) exactly.
        assert!((a.total() - 3.0).abs() < 1e-9);
    }
}
