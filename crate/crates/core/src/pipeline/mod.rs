//! File-based orchestration: load a bundle (target series, social feature
//! table, interaction graph), detect leaders and weight features, decompose
//! the target, assemble windows, optionally tune, train, forecast
//! recursively and report test-set metrics per scenario.

pub mod bundle;
pub mod config;
pub mod features;
pub mod report;
pub mod run;
pub mod synthetic;
pub mod windows;

use thiserror::Error;

use crate::ewt::EwtError;
use crate::forecaster::ForecastError;
use crate::hyperopt::HyperoptError;
use crate::leaders::LeaderError;
use crate::series::SeriesError;

pub use bundle::{load_bundle, save_bundle, Bundle};
pub use config::{Grid, PipelineConfig, TuningConfig, WindowMode};
pub use features::{apply_leader_weights, leader_factor, FeatureColumn, FeatureKind, FeatureMode, FeatureTable, VALENCE_COLUMNS, VOLUME_COLUMNS};
pub use report::{compute_improvements, emit_report, read_report_csv, render_text, write_report_csv, ForecastReport, HorizonMetrics, Improvement, Metric, ReportFormat, ReportRow, ScenarioResult};
pub use run::{evaluate_scenario, fingerprint, fit_scenario, forecast_scenario, leader_weights, run_pipeline, run_scenario, tune_scenario, HorizonForecast, Scenario, ScenarioArtifacts};
pub use synthetic::{generate_synthetic, PlantedTruth, SyntheticSpec, Tone};
pub use windows::{assemble_windows, causal_components, components_at_end, WindowSet};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{what}, line {line}: {msg}")]
    Parse { what: String, line: usize, msg: String },
    #[error("misaligned inputs: {0}")]
    Alignment(String),
    #[error("too short: {0}")]
    TooShort(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{stage}: {source}")]
    Series { stage: &'static str, source: SeriesError },
    #[error("{stage}: {source}")]
    Ewt { stage: &'static str, source: EwtError },
    #[error("{stage}: {source}")]
    Leaders { stage: &'static str, source: LeaderError },
    #[error("{stage}: {source}")]
    Forecast { stage: &'static str, source: ForecastError },
    #[error("{stage}: {source}")]
    Hyperopt { stage: &'static str, source: HyperoptError },
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}

/// Attaches a pipeline stage label to a module error.
pub trait AtStage<T> {
    fn at(self, stage: &'static str) -> Result<T>;
}

macro_rules! at_stage {
    ($err:ty, $variant:ident) => {
        impl<T> AtStage<T> for std::result::Result<T, $err> {
            fn at(self, stage: &'static str) -> Result<T> {
                self.map_err(|source| PipelineError::$variant { stage, source })
            }
        }
    };
}

at_stage!(SeriesError, Series);
at_stage!(EwtError, Ewt);
at_stage!(LeaderError, Leaders);
at_stage!(ForecastError, Forecast);
at_stage!(HyperoptError, Hyperopt);
