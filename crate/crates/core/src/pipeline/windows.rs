//! Causal decomposition of the target and sliding-window assembly.

use serde::{Deserialize, Serialize};

use super::{AtStage, PipelineError, Result};
use crate::ewt::{decompose_with_boundaries, SpectralBoundaries};

/// Value of every component at the last sample of `prefix`. The prefix is
/// mirrored before filtering so the transform does not wrap its last
/// sample around to its first.
pub fn components_at_end(prefix: &[f64], boundaries: &SpectralBoundaries) -> Result<Vec<f64>> {
    let mut ext = prefix.to_vec();
    ext.extend(prefix.iter().rev());
    let d = decompose_with_boundaries(&ext, boundaries).at("ewt")?;
    let t = prefix.len() - 1;
    Ok(d.components.iter().map(|c| c[t]).collect())
}

/// Component `k` at time `t` is computed from `series[..=t]` only, so the
/// channels seen in training match those available when forecasting. The
/// first `min_prefix - 1` samples share the decomposition of the first
/// `min_prefix` values. Returned component-major.
pub fn causal_components(series: &[f64], boundaries: &SpectralBoundaries, min_prefix: usize) -> Result<Vec<Vec<f64>>> {
    let n = series.len();
    if n < min_prefix || min_prefix < 2 {
        return Err(PipelineError::TooShort(format!("causal decomposition needs {min_prefix} samples, got {n}")));
    }
    let mut out = vec![vec![0.0; n]; boundaries.num_bands()];
    let mut ext = series[..min_prefix].to_vec();
    ext.extend(series[..min_prefix].iter().rev());
    let head = decompose_with_boundaries(&ext, boundaries).at("ewt")?;
    for (k, c) in head.components.iter().enumerate() {
        out[k][..min_prefix].copy_from_slice(&c[..min_prefix]);
    }
    for t in min_prefix..n {
        for (k, v) in components_at_end(&series[..=t], boundaries)?.into_iter().enumerate() {
            out[k][t] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSet {
    /// `window_length x channels` input per sample.
    pub windows: Vec<Vec<Vec<f64>>>,
    pub targets: Vec<f64>,
    /// Series index of each target.
    pub target_index: Vec<usize>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Slides a `window_length` window over channel-major `channels`; the
/// target of the window ending at `t` is `target[t + 1]`. `n` aligned
/// points give `n - window_length` pairs.
pub fn assemble_windows(channels: &[Vec<f64>], target: &[f64], window_length: usize) -> Result<WindowSet> {
    let n = target.len();
    if channels.is_empty() {
        return Err(PipelineError::InvalidConfig("no input channels".into()));
    }
    if let Some(c) = channels.iter().find(|c| c.len() != n) {
        return Err(PipelineError::Alignment(format!("channel of length {} against target of length {n}", c.len())));
    }
    if window_length == 0 || n <= window_length {
        return Err(PipelineError::TooShort(format!("{n} points cannot fill a window of {window_length} plus a target")));
    }
    let mut set = WindowSet { windows: Vec::with_capacity(n - window_length), targets: Vec::new(), target_index: Vec::new() };
    for s in 0..n - window_length {
        set.windows.push((s..s + window_length).map(|t| channels.iter().map(|c| c[t]).collect()).collect());
        set.targets.push(target[s + window_length]);
        set.target_index.push(s + window_length);
    }
    Ok(set)
}
