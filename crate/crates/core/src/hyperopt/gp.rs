//! Matérn-5/2 Gaussian-process surrogate with automatic relevance
//! determination and marginal-likelihood hyperparameter fitting.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HyperoptError, Result};

/// Smallest noise variance the fit may choose.
pub const NOISE_FLOOR: f64 = 1e-10;
/// Largest diagonal jitter tried before giving up on a factorization.
pub const MAX_JITTER: f64 = 1e-6;
pub const FIT_STARTS: usize = 5;
pub const FIT_STEPS: usize = 50;

const LENGTH_BOUNDS: (f64, f64) = (1e-2, 1e1);
const SCALE_BOUNDS: (f64, f64) = (1e-2, 1e2);
const NOISE_BOUNDS: (f64, f64) = (NOISE_FLOOR, 1.0);

/// Kernel hyperparameters, all in standardized-loss units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    /// One length scale per search-space dimension; one-hot blocks share.
    pub length_scales: Vec<f64>,
    /// Kernel variance.
    pub output_scale: f64,
    /// Observation noise variance.
    pub noise: f64,
}

impl GpHyper {
    /// Starting point of the first fit start.
    pub fn initial(num_dims: usize) -> Self {
        Self { length_scales: vec![0.3; num_dims], output_scale: 1.0, noise: 1e-2 }
    }

    fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.length_scales.iter().map(|l| l.ln()).collect();
        v.push(self.output_scale.ln());
        v.push(self.noise.ln());
        v
    }

    fn from_log(v: &[f64]) -> Self {
        let n = v.len() - 2;
        Self { length_scales: v[..n].iter().map(|x| x.exp()).collect(), output_scale: v[n].exp(), noise: v[n + 1].exp() }
    }
}

/// Matérn-5/2 covariance between two encoded points. `owner[k]` names the
/// length scale used by coordinate `k`.
pub fn matern52(a: &[f64], b: &[f64], owner: &[usize], hyper: &GpHyper) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(owner)
        .map(|((x, y), &o)| {
            let d = (x - y) / hyper.length_scales[o];
            d * d
        })
        .sum();
    let s5r = (5.0 * r2).sqrt();
    hyper.output_scale * (1.0 + s5r + 5.0 * r2 / 3.0) * (-s5r).exp()
}

#[derive(Debug, Clone)]
pub struct GpSurrogate {
    pub xs: Vec<Vec<f64>>,
    /// Raw losses.
    pub ys: Vec<f64>,
    pub owner: Vec<usize>,
    pub hyper: GpHyper,
    pub y_mean: f64,
    pub y_scale: f64,
    /// Diagonal jitter that was needed on top of the noise.
    pub jitter: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

fn standardize(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 1.0 })
}

fn factor(xs: &[Vec<f64>], owner: &[usize], hyper: &GpHyper) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = xs.len();
    let k = DMatrix::from_fn(n, n, |i, j| matern52(&xs[i], &xs[j], owner, hyper));
    let mut jitter = 0.0;
    loop {
        let mut m = k.clone();
        for i in 0..n {
            m[(i, i)] += hyper.noise + jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, jitter));
        }
        jitter = if jitter == 0.0 { 1e-12 } else { jitter * 10.0 };
        if jitter > MAX_JITTER * 1.000001 {
            return Err(HyperoptError::SingularKernel { jitter: MAX_JITTER });
        }
    }
}

impl GpSurrogate {
    /// Conditions a GP with fixed hyperparameters on the observations.
    pub fn with_hyper(xs: Vec<Vec<f64>>, ys: Vec<f64>, owner: Vec<usize>, hyper: GpHyper) -> Result<Self> {
        if xs.is_empty() {
            return Err(HyperoptError::TooFewObservations { need: 1, got: 0 });
        }
        if xs.len() != ys.len() || xs.iter().any(|x| x.len() != owner.len()) {
            return Err(HyperoptError::InvalidConfig("observation shapes disagree".into()));
        }
        let dims = owner.iter().max().map_or(0, |m| m + 1);
        if hyper.length_scales.len() != dims || hyper.length_scales.iter().any(|l| !(*l > 0.0)) || !(hyper.output_scale > 0.0) || !(hyper.noise >= 0.0) {
            return Err(HyperoptError::InvalidConfig("invalid kernel hyperparameters".into()));
        }
        let (y_mean, y_scale) = standardize(&ys);
        let ystd = DVector::from_iterator(ys.len(), ys.iter().map(|y| (y - y_mean) / y_scale));
        let (chol, jitter) = factor(&xs, &owner, &hyper)?;
        let alpha = chol.solve(&ystd);
        Ok(Self { xs, ys, owner, hyper, y_mean, y_scale, jitter, chol, alpha })
    }

    /// Same data, different hyperparameters.
    pub fn refit(&self, hyper: GpHyper) -> Result<Self> {
        Self::with_hyper(self.xs.clone(), self.ys.clone(), self.owner.clone(), hyper)
    }

    /// Log marginal likelihood of the standardized losses.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.xs.len();
        let ystd = DVector::from_iterator(n, self.ys.iter().map(|y| (y - self.y_mean) / self.y_scale));
        let log_det: f64 = self.chol.l_dirty().diagonal().iter().take(n).map(|d| d.ln()).sum();
        -0.5 * ystd.dot(&self.alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    /// Posterior mean and standard deviation of the latent function in
    /// standardized units.
    pub fn posterior_standardized(&self, z: &[f64]) -> (f64, f64) {
        let n = self.xs.len();
        let ks = DVector::from_iterator(n, self.xs.iter().map(|x| matern52(x, z, &self.owner, &self.hyper)));
        let mean = ks.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&ks).expect("Cholesky factor has a positive diagonal");
        let var = (self.hyper.output_scale - v.dot(&v)).max(0.0);
        (mean, var.sqrt())
    }

    /// Best (smallest) raw loss observed.
    pub fn incumbent(&self) -> f64 {
        self.ys.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Posterior mean and standard deviation in raw loss units.
pub fn gp_posterior(surrogate: &GpSurrogate, z: &[f64]) -> (f64, f64) {
    let (m, s) = surrogate.posterior_standardized(z);
    (surrogate.y_mean + surrogate.y_scale * m, surrogate.y_scale * s)
}

fn clamp_log(v: &mut [f64]) {
    let n = v.len() - 2;
    for x in &mut v[..n] {
        *x = x.clamp(LENGTH_BOUNDS.0.ln(), LENGTH_BOUNDS.1.ln());
    }
    v[n] = v[n].clamp(SCALE_BOUNDS.0.ln(), SCALE_BOUNDS.1.ln());
    v[n + 1] = v[n + 1].clamp(NOISE_BOUNDS.0.ln(), NOISE_BOUNDS.1.ln());
}

/// Log marginal likelihood for given hyperparameters, `-inf` when the
/// kernel cannot be factorized.
pub fn log_marginal_likelihood(xs: &[Vec<f64>], ys: &[f64], owner: &[usize], hyper: &GpHyper) -> f64 {
    GpSurrogate::with_hyper(xs.to_vec(), ys.to_vec(), owner.to_vec(), hyper.clone()).map_or(f64::NEG_INFINITY, |s| s.log_marginal_likelihood())
}

/// Fits length scales, output scale and noise by maximizing the log
/// marginal likelihood with a seeded multi-start coordinate search in log
/// parameter space. The first start is [`GpHyper::initial`], so the result
/// never has lower likelihood than that point.
pub fn gp_fit(xs: &[Vec<f64>], ys: &[f64], owner: &[usize], seed: u64) -> Result<GpSurrogate> {
    if xs.is_empty() {
        return Err(HyperoptError::TooFewObservations { need: 1, got: 0 });
    }
    let dims = owner.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lml = |v: &[f64]| log_marginal_likelihood(xs, ys, owner, &GpHyper::from_log(v));

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in 0..FIT_STARTS {
        let mut v = if start == 0 {
            GpHyper::initial(dims).to_log()
        } else {
            let mut v: Vec<f64> = (0..dims).map(|_| rng.random_range(LENGTH_BOUNDS.0.ln()..LENGTH_BOUNDS.1.ln())).collect();
            v.push(rng.random_range(SCALE_BOUNDS.0.ln()..SCALE_BOUNDS.1.ln()));
            v.push(rng.random_range(NOISE_BOUNDS.0.ln()..NOISE_BOUNDS.1.ln()));
            v
        };
        clamp_log(&mut v);
        let mut cur = lml(&v);
        let mut steps = vec![1.0; v.len()];
        for _ in 0..FIT_STEPS {
            for k in 0..v.len() {
                let mut moved = false;
                for dir in [1.0, -1.0] {
                    let mut t = v.clone();
                    t[k] += dir * steps[k];
                    clamp_log(&mut t);
                    if t[k] == v[k] {
                        continue;
                    }
                    let val = lml(&t);
                    if val > cur {
                        v = t;
                        cur = val;
                        moved = true;
                        break;
                    }
                }
                steps[k] = if moved { (steps[k] * 2.0).min(8.0) } else { steps[k] * 0.5 };
            }
        }
        if best.as_ref().is_none_or(|(b, _)| cur > *b) {
            best = Some((cur, v));
        }
    }
    let (_, v) = best.expect("at least one start");
    GpSurrogate::with_hyper(xs.to_vec(), ys.to_vec(), owner.to_vec(), GpHyper::from_log(&v))
}
