//! Rolling-origin cross-validation objective for network hyperparameters.

use serde::{Deserialize, Serialize};

use super::space::{ParamValue, Point};
use super::{HyperoptError, Result};
use crate::forecaster::{self, ForecastError, Mode, NetworkSpec, TrainingConfig};

/// One fold: train on `[0, train_end)`, validate on `[train_end, val_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train_end: usize,
    pub val_end: usize,
}

/// Splits `n` time-ordered samples into `folds` folds whose training
/// prefix starts at `min_train` and grows by one validation block per fold.
/// The last block absorbs the remainder.
pub fn rolling_origin_folds(n: usize, folds: usize, min_train: usize) -> Result<Vec<Fold>> {
    if folds == 0 || min_train == 0 || n < min_train + folds {
        return Err(HyperoptError::InvalidConfig(format!("cannot make {folds} folds from {n} samples with {min_train} initial training samples")));
    }
    let block = (n - min_train) / folds;
    Ok((0..folds)
        .map(|k| {
            let train_end = min_train + k * block;
            Fold { train_end, val_end: if k + 1 == folds { n } else { train_end + block } }
        })
        .collect())
}

/// Applies hyperparameter values named `units`, `layers`, `learning_rate`,
/// `l2_penalty`, `dropout_rate` and `mode` to base settings. Other names
/// are rejected.
pub fn configure(point: &Point, spec: &NetworkSpec, config: &TrainingConfig) -> Result<(NetworkSpec, TrainingConfig)> {
    let mut s = spec.clone();
    let mut c = config.clone();
    for (name, v) in point {
        let bad = || HyperoptError::OutOfBounds { name: name.clone(), value: v.to_string() };
        match (name.as_str(), v) {
            ("units", ParamValue::Int(u)) if *u > 0 => s.units = *u as usize,
            ("layers", ParamValue::Int(l)) if *l > 0 => s.num_layers = *l as usize,
            ("learning_rate", _) => c.learning_rate = v.as_f64().ok_or_else(bad)?,
            ("l2_penalty", _) => c.l2_penalty = v.as_f64().ok_or_else(bad)?,
            ("dropout_rate", _) => s.dropout_rate = v.as_f64().ok_or_else(bad)?,
            ("mode", ParamValue::Cat(m)) => s.mode = m.parse::<Mode>().map_err(|_| bad())?,
            _ => return Err(bad()),
        }
    }
    s.validate().map_err(|e| HyperoptError::InvalidConfig(e.to_string()))?;
    c.validate().map_err(|e| HyperoptError::InvalidConfig(e.to_string()))?;
    Ok((s, c))
}

/// Mean over folds of the one-step-ahead validation RMSE.
pub fn cv_rmse(windows: &[Vec<Vec<f64>>], targets: &[f64], spec: &NetworkSpec, config: &TrainingConfig, folds: &[Fold]) -> std::result::Result<f64, ForecastError> {
    if windows.len() != targets.len() {
        return Err(ForecastError::LengthMismatch { left: windows.len(), right: targets.len() });
    }
    let mut total = 0.0;
    for f in folds {
        if f.val_end > windows.len() || f.train_end >= f.val_end {
            return Err(ForecastError::InvalidConfig(format!("fold {f:?} does not fit {} samples", windows.len())));
        }
        let model = forecaster::train(&windows[..f.train_end], &targets[..f.train_end], spec, config)?;
        let mut sse = 0.0;
        for (w, y) in windows[f.train_end..f.val_end].iter().zip(&targets[f.train_end..f.val_end]) {
            let p = model.predict(w)?;
            sse += (p - y) * (p - y);
        }
        total += (sse / (f.val_end - f.train_end) as f64).sqrt();
    }
    Ok(total / folds.len() as f64)
}
