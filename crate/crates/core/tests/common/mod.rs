//! Helpers shared by integration test targets.
#![allow(dead_code)]

use hybridcast::hyperopt::{rolling_origin_folds, Dimension, Point, SearchSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gaussian elimination with partial pivoting; solves `a x = b`.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Two-hyperparameter tuning box for the kernel-ridge toy task.
pub fn toy_space() -> SearchSpace {
    SearchSpace::new(vec![Dimension::real_log("bandwidth", 1e-3, 10.0), Dimension::real_log("ridge", 1e-8, 10.0)]).unwrap()
}

/// Kernel ridge regression of a noisy sine on 60 scattered inputs; the
/// loss is rolling-origin cross-validated RMSE over three folds.
pub fn toy_objective(data_seed: u64) -> impl Fn(&Point) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let xs: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x).sin() + 0.1 * (rng.random::<f64>() - 0.5) * 3.4).collect();
    let folds = rolling_origin_folds(60, 3, 30).unwrap();
    move |p: &Point| {
        let bw = p["bandwidth"].as_f64().unwrap();
        let ridge = p["ridge"].as_f64().unwrap();
        let k = |a: f64, b: f64| (-(a - b) * (a - b) / (2.0 * bw * bw)).exp();
        let mut total = 0.0;
        for f in &folds {
            let n = f.train_end;
            let a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| k(xs[i], xs[j]) + if i == j { ridge } else { 0.0 }).collect()).collect();
            let alpha = solve_dense(a, ys[..n].to_vec());
            let mut sse = 0.0;
            for t in f.train_end..f.val_end {
                let pred: f64 = (0..n).map(|i| alpha[i] * k(xs[i], xs[t])).sum();
                sse += (pred - ys[t]) * (pred - ys[t]);
            }
            total += (sse / (f.val_end - f.train_end) as f64).sqrt();
        }
        let loss = total / folds.len() as f64;
        if loss.is_finite() { Ok(loss) } else { Err("non-finite loss".into()) }
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}
