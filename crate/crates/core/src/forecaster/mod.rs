//! Stacked (bi)directional LSTM regressor trained by full-batch
//! backpropagation through time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod checkpoint;
pub mod network;
pub mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use network::{forward_bilayer, forward_cell, forward_stacked, CellParams, HeadParams, LayerParams, NetworkParams};
pub use train::{loss, predict_multi_step, predict_multi_step_with, train, TrainedModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} predictions vs {right} targets")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} training samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, ForecastError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Bilstm,
    Lstm,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Bilstm => "bilstm",
            Mode::Lstm => "lstm",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bilstm" => Ok(Mode::Bilstm),
            "lstm" => Ok(Mode::Lstm),
            _ => Err(ForecastError::InvalidConfig(format!("unknown mode {s:?}"))),
        }
    }
}

/// Network architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSpec {
    pub num_layers: usize,
    pub units: usize,
    /// Probability of dropping an activation during training.
    pub dropout_rate: f64,
    pub mode: Mode,
    pub input_dim: usize,
    pub window_length: usize,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self { num_layers: 2, units: 16, dropout_rate: 0.1, mode: Mode::Bilstm, input_dim: 1, window_length: 12 }
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.units == 0 || self.input_dim == 0 || self.window_length == 0 {
            return Err(ForecastError::InvalidConfig("layers, units, input_dim and window_length must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(ForecastError::InvalidConfig(format!("dropout_rate {} outside [0, 1)", self.dropout_rate)));
        }
        Ok(())
    }

    /// Features the head reads: `2u` bidirectional, `u` unidirectional.
    pub fn head_dim(&self) -> usize {
        match self.mode {
            Mode::Bilstm => 2 * self.units,
            Mode::Lstm => self.units,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Epochs before any are eligible as the best epoch or count towards
    /// patience.
    pub min_epochs: usize,
    pub grad_clip_norm: f64,
    pub seed: u64,
    /// Trailing fraction of samples held out for early stopping.
    pub validation_fraction: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, l2_penalty: 1e-6, max_epochs: 500, patience: 25, min_epochs: 0, grad_clip_norm: 5.0, seed: 0, validation_fraction: 0.2 }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.l2_penalty >= 0.0
            && self.max_epochs > 0
            && self.patience > 0
            && self.patience <= self.max_epochs
            && self.min_epochs < self.max_epochs
            && self.grad_clip_norm > 0.0
            && self.validation_fraction > 0.0
            && self.validation_fraction < 1.0;
        if !ok {
            return Err(ForecastError::InvalidConfig(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}
