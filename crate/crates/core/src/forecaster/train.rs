use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{forward_stacked, sample_pass, NetworkParams};
use super::{ForecastError, NetworkSpec, Result, TrainingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub seed: u64,
}

impl TrainedModel {
    /// Deterministic one-step prediction for a `window_length x input_dim`
    /// window.
    pub fn predict(&self, window: &[Vec<f64>]) -> Result<f64> {
        forward_stacked::<ChaCha8Rng>(window, &self.params, None)
    }
}

/// Mean squared error plus `l2_penalty` times the squared weight norm.
pub fn loss(predictions: &[f64], targets: &[f64], l2_penalty: f64, params: &NetworkParams) -> Result<f64> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(ForecastError::LengthMismatch { left: predictions.len(), right: targets.len() });
    }
    let mse = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / predictions.len() as f64;
    Ok(mse + l2_penalty * params.weight_sq_norm())
}

/// Loss and its exact gradient over a batch. With `dropout`, a fresh mask
/// is drawn per sample and time step from the supplied generator.
pub fn loss_and_gradient<R: Rng>(
    params: &NetworkParams,
    windows: &[Vec<Vec<f64>>],
    targets: &[f64],
    l2_penalty: f64,
    mut dropout: Option<(f64, &mut R)>,
) -> (f64, NetworkParams) {
    let n = windows.len() as f64;
    let mut grad = params.zeros_like();
    let mut sse = 0.0;
    for (w, &y) in windows.iter().zip(targets) {
        let d = dropout.as_mut().map(|(r, g)| (*r, &mut **g));
        let dl = move |p: f64| 2.0 * (p - y) / n;
        let pred = sample_pass(w, params, d, Some((&dl, &mut grad)));
        sse += (pred - y) * (pred - y);
    }
    let mut flat = grad.to_flat();
    let p = params.to_flat();
    for ((g, &v), is_w) in flat.iter_mut().zip(&p).zip(params.weight_mask()) {
        if is_w {
            *g += 2.0 * l2_penalty * v;
        }
    }
    grad.set_flat(&flat);
    (sse / n + l2_penalty * params.weight_sq_norm(), grad)
}

fn check_windows(windows: &[Vec<Vec<f64>>], targets: &[f64], spec: &NetworkSpec) -> Result<()> {
    if windows.len() != targets.len() {
        return Err(ForecastError::LengthMismatch { left: windows.len(), right: targets.len() });
    }
    for w in windows {
        if w.len() != spec.window_length {
            return Err(ForecastError::ShapeMismatch { expected: spec.window_length, got: w.len() });
        }
        for x in w {
            if x.len() != spec.input_dim {
                return Err(ForecastError::ShapeMismatch { expected: spec.input_dim, got: x.len() });
            }
        }
    }
    Ok(())
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = Self::B1 * self.m[k] + (1.0 - Self::B1) * grad[k];
            self.v[k] = Self::B2 * self.v[k] + (1.0 - Self::B2) * grad[k] * grad[k];
            params[k] -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
        }
    }
}

fn mse(params: &NetworkParams, windows: &[Vec<Vec<f64>>], targets: &[f64]) -> f64 {
    let sse: f64 = windows
        .iter()
        .zip(targets)
        .map(|(w, y)| {
            let p = sample_pass::<ChaCha8Rng>(w, params, None, None);
            (p - y) * (p - y)
        })
        .sum();
    sse / windows.len() as f64
}

/// Full-batch training with Adam, global-norm clipping and early stopping on
/// the trailing validation block. Returns the best-validation parameters.
pub fn train(windows: &[Vec<Vec<f64>>], targets: &[f64], spec: &NetworkSpec, config: &TrainingConfig) -> Result<TrainedModel> {
    spec.validate()?;
    config.validate()?;
    check_windows(windows, targets, spec)?;
    let need = 2 * spec.window_length + config.patience;
    if windows.len() < need {
        return Err(ForecastError::TooFewSamples { need, got: windows.len() });
    }
    let n_val = ((windows.len() as f64 * config.validation_fraction).round() as usize).clamp(1, windows.len() - 1);
    let n_tr = windows.len() - n_val;
    let (tr_w, va_w) = windows.split_at(n_tr);
    let (tr_y, va_y) = targets.split_at(n_tr);

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut drop_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut params = NetworkParams::init(spec, &mut init_rng);
    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since = 0;
    let mut adam = Adam::new(params.num_params());
    let mut train_loss = Vec::new();
    let mut val_loss = Vec::new();

    for epoch in 1..=config.max_epochs {
        let dropout = (spec.dropout_rate > 0.0).then_some((spec.dropout_rate, &mut drop_rng));
        let (l, grad) = loss_and_gradient(&params, tr_w, tr_y, config.l2_penalty, dropout);
        let mut g = grad.to_flat();
        if !l.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(ForecastError::DivergedLoss { epoch });
        }
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > config.grad_clip_norm {
            let s = config.grad_clip_norm / norm;
            g.iter_mut().for_each(|v| *v *= s);
        }
        let mut flat = params.to_flat();
        adam.step(&mut flat, &g, config.learning_rate);
        params.set_flat(&flat);

        let v = mse(&params, va_w, va_y);
        if !v.is_finite() {
            return Err(ForecastError::DivergedLoss { epoch });
        }
        train_loss.push(l);
        val_loss.push(v);
        if epoch <= config.min_epochs {
            continue;
        }
        if v < best_val {
            best_val = v;
            best.copy_from(&params);
            best_epoch = epoch;
            since = 0;
        } else {
            since += 1;
            if since >= config.patience {
                break;
            }
        }
    }
    log::debug!("trained {} epochs, best epoch {best_epoch}, val mse {best_val:.3e}", train_loss.len());
    Ok(TrainedModel { spec: spec.clone(), params: best, train_loss, val_loss, best_epoch, seed: config.seed })
}

/// Recursive forecast: each prediction is written into the target channel
/// of a new last row (other channels repeat the last observed row) and the
/// window slides by one.
pub fn predict_multi_step(model: &TrainedModel, window: &[Vec<f64>], horizon: usize, target_channel: usize) -> Result<Vec<f64>> {
    if target_channel >= model.spec.input_dim {
        return Err(ForecastError::ShapeMismatch { expected: model.spec.input_dim, got: target_channel + 1 });
    }
    predict_multi_step_with(model, window, horizon, |w, pred| {
        let mut row = w.last().expect("nonempty window").clone();
        row[target_channel] = pred;
        w.remove(0);
        w.push(row);
    })
}

/// Recursive forecast with a caller-supplied window update.
pub fn predict_multi_step_with<F>(model: &TrainedModel, window: &[Vec<f64>], horizon: usize, mut update: F) -> Result<Vec<f64>>
where
    F: FnMut(&mut Vec<Vec<f64>>, f64),
{
    if horizon == 0 {
        return Err(ForecastError::InvalidConfig("horizon must be at least 1".into()));
    }
    let mut w = window.to_vec();
    let mut out = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let p = model.predict(&w)?;
        out.push(p);
        if h + 1 < horizon {
            update(&mut w, p);
        }
    }
    Ok(out)
}
