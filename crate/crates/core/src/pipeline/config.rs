//! Pipeline configuration, read from TOML. Every section mirrors a module
//! configuration; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::FeatureMode;
use super::{PipelineError, Result};
use crate::ewt::EwtConfig;
use crate::forecaster::{NetworkSpec, TrainingConfig};
use crate::hyperopt::{AcquisitionConfig, SearchSpace};
use crate::leaders::DetectionConfig;

/// How the target decomposition reaches the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// One model; input channels are the target components (or the raw
    /// target) followed by the feature columns.
    #[default]
    ComponentAugmented,
    /// One model per component, each predicting its own component; the
    /// forecast is their sum.
    DecomposeEnsemble,
}

/// Which scenarios a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    /// The scenario given by `use_leaders`, `use_ewt` and `feature_mode`.
    #[default]
    Single,
    /// {leaders on, off} x {EWT on, off} at the configured feature mode.
    LeadersEwt,
    /// Every feature mode with the configured flags.
    FeatureModes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningConfig {
    /// Objective evaluations; 0 trains the configured network as is.
    pub budget: usize,
    /// Initial design size; defaults to a quarter of the budget, at least 5.
    pub init_design: Option<usize>,
    pub folds: usize,
    /// Share of the training windows in the first fold's training prefix.
    pub min_train_fraction: f64,
    /// Defaults to the standard six-hyperparameter box.
    pub space: Option<SearchSpace>,
    pub acquisition: AcquisitionConfig,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self { budget: 0, init_design: None, folds: 3, min_train_fraction: 0.6, space: None, acquisition: AcquisitionConfig::default() }
    }
}

impl TuningConfig {
    pub fn space(&self) -> SearchSpace {
        self.space.clone().unwrap_or_else(SearchSpace::table1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub feature_mode: FeatureMode,
    pub use_ewt: bool,
    pub use_leaders: bool,
    pub grid: Grid,
    pub window_mode: WindowMode,
    /// Min-max target interval for the target and every feature column.
    pub norm_low: f64,
    pub norm_high: f64,
    /// Defaults to the trailing 20% of the series.
    pub test_length: Option<usize>,
    pub horizons: Vec<usize>,
    /// Shortest prefix the causal decomposition is computed on.
    pub ewt_min_prefix: usize,
    pub decay_kappa: f64,
    pub max_hops: usize,
    pub ewt: EwtConfig,
    pub leaders: DetectionConfig,
    /// `input_dim` is set from the assembled channels.
    pub network: NetworkSpec,
    /// `seed` is replaced by the per-scenario training seed.
    pub training: TrainingConfig,
    pub tuning: TuningConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            feature_mode: FeatureMode::Full,
            use_ewt: true,
            use_leaders: true,
            grid: Grid::Single,
            window_mode: WindowMode::ComponentAugmented,
            norm_low: 0.0,
            norm_high: 1.0,
            test_length: None,
            horizons: vec![1, 2, 3],
            ewt_min_prefix: 24,
            decay_kappa: std::f64::consts::LN_2,
            max_hops: 2,
            ewt: EwtConfig::default(),
            leaders: DetectionConfig::default(),
            network: NetworkSpec::default(),
            // Early validation minima are usually a near-constant predictor
            // that happens to match the trailing block; skip past them.
            training: TrainingConfig { max_epochs: 1000, min_epochs: 50, ..TrainingConfig::default() },
            tuning: TuningConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Keys missing from `text`, at any depth, keep the values of
    /// [`PipelineConfig::default`].
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let err = |e: &dyn std::fmt::Display| PipelineError::InvalidConfig(e.to_string());
        let user: toml::Table = toml::from_str(text).map_err(|e| err(&e))?;
        let mut merged = toml::Table::try_from(Self::default()).map_err(|e| err(&e))?;
        merge(&mut merged, user);
        let cfg: Self = toml::Value::Table(merged).try_into().map_err(|e| err(&e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| PipelineError::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return bad(format!("horizons must be non-empty and >= 1, got {:?}", self.horizons));
        }
        if !(self.norm_low < self.norm_high) {
            return bad(format!("norm_low {} must be below norm_high {}", self.norm_low, self.norm_high));
        }
        if self.ewt_min_prefix < 2 {
            return bad("ewt_min_prefix must be at least 2".into());
        }
        if !(self.decay_kappa > 0.0) || self.max_hops == 0 {
            return bad("decay_kappa and max_hops must be positive".into());
        }
        if self.test_length == Some(0) {
            return bad("test_length must be positive".into());
        }
        if self.tuning.budget > 0 {
            if self.tuning.folds == 0 || !(self.tuning.min_train_fraction > 0.0 && self.tuning.min_train_fraction < 1.0) {
                return bad("tuning needs folds >= 1 and min_train_fraction in (0, 1)".into());
            }
            self.tuning.space().validate().map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
            self.tuning.acquisition.validate().map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        }
        self.ewt.validate().map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        self.leaders.validate().map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        let net = NetworkSpec { input_dim: 1, ..self.network.clone() };
        net.validate().map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        self.training.validate().map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
