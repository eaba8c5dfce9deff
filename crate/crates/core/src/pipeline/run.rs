//! Scenario execution: fit on the training segment, forecast every test
//! period from rolling origins, evaluate, and assemble the report.
//!
//! Seed fan-out: each scenario cell seeds from `derive(master, label)`;
//! its networks train with `derive_indexed(cell, "train", k)` and tuning
//! uses `derive(cell, "tune")`. Leader detection, which does not depend on
//! the scenario, uses `derive(master, "leaders")`.

use serde::{Deserialize, Serialize};

use super::bundle::Bundle;
use super::config::{Grid, PipelineConfig, WindowMode};
use super::features::{leader_factor, FeatureMode, FeatureTable};
use super::report::{ForecastReport, HorizonMetrics, ModelSummary, ScenarioResult, TuningSummary};
use super::windows::{assemble_windows, causal_components, components_at_end, WindowSet};
use super::{AtStage, PipelineError, Result};
use crate::ewt::{decompose, SpectralBoundaries};
use crate::forecaster::{self, NetworkSpec, TrainedModel, TrainingConfig};
use crate::hyperopt::{configure, cv_rmse, default_init_design, rolling_origin_folds, run_bo, BoHistory};
use crate::leaders::{assign_weights, detect_leaders, DetectionReport, LeaderWeights};
use crate::seeds;
use crate::series::{evaluate, NormalizationParams, SplitSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub use_leaders: bool,
    pub use_ewt: bool,
    pub feature_mode: FeatureMode,
}

impl Scenario {
    pub fn from_config(config: &PipelineConfig) -> Self {
        Self { use_leaders: config.use_leaders, use_ewt: config.use_ewt, feature_mode: config.feature_mode }
    }

    pub fn label(&self) -> String {
        let on = |b: bool| if b { "on" } else { "off" };
        format!("leaders={},ewt={},features={}", on(self.use_leaders), on(self.use_ewt), self.feature_mode.label())
    }

    /// Cells of the configured grid, in report order.
    pub fn grid(config: &PipelineConfig) -> Vec<Scenario> {
        let base = Self::from_config(config);
        match config.grid {
            Grid::Single => vec![base],
            Grid::LeadersEwt => [(true, true), (true, false), (false, true), (false, false)]
                .into_iter()
                .map(|(use_leaders, use_ewt)| Scenario { use_leaders, use_ewt, ..base })
                .collect(),
            Grid::FeatureModes => [FeatureMode::Full, FeatureMode::AttentionOnly, FeatureMode::EndorsementOnly, FeatureMode::None]
                .into_iter()
                .map(|feature_mode| Scenario { feature_mode, ..base })
                .collect(),
        }
    }
}

/// Everything learned from the training segment; enough to forecast the
/// rest of the bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioArtifacts {
    pub scenario: Scenario,
    pub label: String,
    pub seed: u64,
    pub window_mode: WindowMode,
    pub train_len: usize,
    pub min_prefix: usize,
    pub target_norm: NormalizationParams,
    pub columns: Vec<String>,
    /// `None` for columns constant over the training segment.
    pub column_norms: Vec<Option<NormalizationParams>>,
    /// Leader weighting applied after normalization; 1 when off.
    pub column_factors: Vec<f64>,
    pub leaders: Option<Vec<String>>,
    pub boundaries: Option<SpectralBoundaries>,
    pub models: Vec<TrainedModel>,
    pub tuning: Option<BoHistory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonForecast {
    pub horizon: usize,
    pub index: Vec<usize>,
    pub observed: Vec<f64>,
    pub predicted: Vec<f64>,
}

pub fn test_length(config: &PipelineConfig, n: usize) -> Result<usize> {
    let spec = config.test_length.map_or_else(|| SplitSpec::default_for(n), |test_length| SplitSpec { test_length });
    spec.validate(n).at("split")?;
    Ok(spec.test_length)
}

/// Runs leader detection and weighting on the bundle's graph.
pub fn leader_weights(config: &PipelineConfig, bundle: &Bundle) -> Result<(DetectionReport, LeaderWeights)> {
    let graph = bundle.graph.as_ref().ok_or_else(|| PipelineError::InvalidConfig("leader weighting needs an interaction graph".into()))?;
    let mut det = config.leaders.clone();
    det.search.seed = seeds::derive(config.master_seed, "leaders");
    let report = detect_leaders(graph, &det).at("detect leaders")?;
    let weights = assign_weights(graph, &report.coalition.indices, config.decay_kappa, config.max_hops).at("leader weights")?;
    Ok((report, weights))
}

/// Normalized, leader-weighted feature columns over every period of the
/// bundle, column-major.
fn prepared_features(art: &ScenarioArtifacts, features: &FeatureTable, norm_low: f64) -> Result<Vec<Vec<f64>>> {
    art.columns
        .iter()
        .zip(&art.column_norms)
        .zip(&art.column_factors)
        .map(|((name, norm), &factor)| {
            let col = features.columns.iter().find(|c| &c.name() == name).ok_or_else(|| PipelineError::Alignment(format!("feature column {name} is missing")))?;
            Ok(col.values.iter().map(|&v| factor * norm.map_or(norm_low, |p| p.apply(v))).collect())
        })
        .collect()
}

/// Training window sets: one for the component-augmented model, one per
/// component for the ensemble.
fn window_sets(art: &ScenarioArtifacts, z: &[f64], features: &[Vec<f64>], window_length: usize) -> Result<Vec<WindowSet>> {
    let components = match &art.boundaries {
        Some(b) => causal_components(z, b, art.min_prefix)?,
        None => vec![z.to_vec()],
    };
    match art.window_mode {
        WindowMode::ComponentAugmented => {
            let channels: Vec<Vec<f64>> = components.into_iter().chain(features.iter().cloned()).collect();
            Ok(vec![assemble_windows(&channels, z, window_length)?])
        }
        WindowMode::DecomposeEnsemble => components
            .iter()
            .map(|c| {
                let channels: Vec<Vec<f64>> = std::iter::once(c.clone()).chain(features.iter().cloned()).collect();
                assemble_windows(&channels, c, window_length)
            })
            .collect(),
    }
}

fn tune(config: &PipelineConfig, sets: &[WindowSet], spec: &NetworkSpec, training: &TrainingConfig, seed: u64) -> Result<BoHistory> {
    let t = &config.tuning;
    let space = t.space();
    let n = sets[0].len();
    let min_train = ((n as f64) * t.min_train_fraction).ceil() as usize;
    let folds = rolling_origin_folds(n, t.folds, min_train).at("tune")?;
    let objective = |p: &crate::hyperopt::Point| -> std::result::Result<f64, String> {
        let (s, c) = configure(p, spec, training).map_err(|e| e.to_string())?;
        let mut total = 0.0;
        for set in sets {
            total += cv_rmse(&set.windows, &set.targets, &s, &c, &folds).map_err(|e| e.to_string())?;
        }
        Ok(total / sets.len() as f64)
    };
    let init = t.init_design.unwrap_or_else(|| default_init_design(t.budget));
    run_bo(objective, &space, t.budget, init, seed, &t.acquisition).at("tune")
}

/// Everything fitted before the networks, with the training window sets
/// and the network shape they imply.
fn prepare(config: &PipelineConfig, bundle: &Bundle, scenario: Scenario) -> Result<(ScenarioArtifacts, Vec<WindowSet>, NetworkSpec)> {
    config.validate()?;
    let label = scenario.label();
    let seed = seeds::derive(config.master_seed, &label);
    let n = bundle.target.len();
    let train_len = n - test_length(config, n)?;
    let train = &bundle.target.values()[..train_len];
    let target_norm = NormalizationParams::fit(train, config.norm_low, config.norm_high).at("normalize")?;
    let z: Vec<f64> = train.iter().map(|&v| target_norm.apply(v)).collect();

    let selected = bundle.features.select(scenario.feature_mode);
    let columns: Vec<String> = selected.columns.iter().map(|c| c.name()).collect();
    let column_norms = selected.columns.iter().map(|c| NormalizationParams::fit(&c.values[..train_len], config.norm_low, config.norm_high).ok()).collect();

    let (leaders, column_factors) = if scenario.use_leaders {
        let (report, weights) = leader_weights(config, bundle)?;
        if !selected.columns.is_empty() && !selected.has_attribution() {
            log::warn!("{label}: feature table has no node attribution; leader weighting is a no-op");
        }
        (Some(report.coalition.members), selected.columns.iter().map(|c| leader_factor(c, &weights)).collect())
    } else {
        (None, vec![1.0; selected.columns.len()])
    };

    let boundaries = if scenario.use_ewt { Some(decompose(&z, &config.ewt).at("ewt")?.boundaries) } else { None };

    let art = ScenarioArtifacts {
        scenario,
        label,
        seed,
        window_mode: config.window_mode,
        train_len,
        min_prefix: config.ewt_min_prefix.min(train_len),
        target_norm,
        columns,
        column_norms,
        column_factors,
        leaders,
        boundaries,
        models: Vec::new(),
        tuning: None,
    };
    let features: Vec<Vec<f64>> = prepared_features(&art, &selected.slice(0, train_len), config.norm_low)?;
    let sets = window_sets(&art, &z, &features, config.network.window_length)?;
    let spec = NetworkSpec { input_dim: sets[0].windows[0][0].len(), ..config.network.clone() };
    Ok((art, sets, spec))
}

/// Runs the hyperparameter search for one scenario without training the
/// final networks. Returns the history and a copy of `config` with the best
/// network and training settings and tuning switched off.
pub fn tune_scenario(config: &PipelineConfig, bundle: &Bundle, scenario: Scenario) -> Result<(BoHistory, PipelineConfig)> {
    if config.tuning.budget == 0 {
        return Err(PipelineError::InvalidConfig("tuning needs a positive budget".into()));
    }
    let (art, sets, spec) = prepare(config, bundle, scenario)?;
    let history = tune(config, &sets, &spec, &config.training, seeds::derive(art.seed, "tune"))?;
    let (network, training) = configure(&history.best_point, &spec, &config.training).at("tune")?;
    let mut tuned = config.clone();
    tuned.network = NetworkSpec { input_dim: config.network.input_dim, ..network };
    tuned.training = TrainingConfig { seed: config.training.seed, ..training };
    tuned.tuning.budget = 0;
    Ok((history, tuned))
}

/// Fits one scenario on the training segment of `bundle`. Nothing indexed
/// at or after the split point is read.
pub fn fit_scenario(config: &PipelineConfig, bundle: &Bundle, scenario: Scenario) -> Result<ScenarioArtifacts> {
    let (mut art, sets, mut spec) = prepare(config, bundle, scenario)?;
    let mut training = config.training.clone();
    if config.tuning.budget > 0 {
        let history = tune(config, &sets, &spec, &training, seeds::derive(art.seed, "tune"))?;
        (spec, training) = configure(&history.best_point, &spec, &training).at("tune")?;
        art.tuning = Some(history);
    }
    for (k, set) in sets.iter().enumerate() {
        let cfg = TrainingConfig { seed: seeds::derive_indexed(art.seed, "train", k as u64), ..training.clone() };
        art.models.push(forecaster::train(&set.windows, &set.targets, &spec, &cfg).at("train")?);
    }
    Ok(art)
}

struct Forecaster<'a> {
    art: &'a ScenarioArtifacts,
    z: Vec<f64>,
    features: Vec<Vec<f64>>,
    components: Option<Vec<Vec<f64>>>,
    window_length: usize,
}

impl<'a> Forecaster<'a> {
    fn new(art: &'a ScenarioArtifacts, bundle: &Bundle, norm_low: f64) -> Result<Self> {
        let z: Vec<f64> = bundle.target.values().iter().map(|&v| art.target_norm.apply(v)).collect();
        let features = prepared_features(art, &bundle.features, norm_low)?;
        let components = art.boundaries.as_ref().map(|b| causal_components(&z, b, art.min_prefix)).transpose()?;
        let window_length = art.models[0].spec.window_length;
        Ok(Self { art, z, features, components, window_length })
    }

    /// Normalized forecast `steps` ahead of `origin`, feeding predictions
    /// back in. Feature rows past the origin repeat the origin's row.
    fn forecast(&self, origin: usize, steps: usize) -> Result<f64> {
        let w = self.window_length;
        if origin + 1 < w {
            return Err(PipelineError::TooShort(format!("origin {origin} precedes a full window of {w}")));
        }
        let mut history = self.z[..=origin].to_vec();
        // Target channels per time index: observed ones are causal and
        // precomputed; predicted ones are decomposed as they arrive.
        let mut extra: Vec<Vec<f64>> = Vec::new();
        let mut last = 0.0;
        for _ in 0..steps {
            let len = history.len();
            let target_row = |t: usize| -> Vec<f64> {
                match &self.components {
                    Some(c) if t <= origin => c.iter().map(|k| k[t]).collect(),
                    Some(_) => extra[t - origin - 1].clone(),
                    None => vec![history[t]],
                }
            };
            let feat_row = |t: usize| -> Vec<f64> { self.features.iter().map(|c| c[t.min(origin)]).collect() };
            let rows: Vec<(Vec<f64>, Vec<f64>)> = (len - w..len).map(|t| (target_row(t), feat_row(t))).collect();
            let p = match self.art.window_mode {
                WindowMode::ComponentAugmented => {
                    let window: Vec<Vec<f64>> = rows.iter().map(|(a, b)| a.iter().chain(b).copied().collect()).collect();
                    self.art.models[0].predict(&window).at("forecast")?
                }
                WindowMode::DecomposeEnsemble => {
                    let mut sum = 0.0;
                    for (k, m) in self.art.models.iter().enumerate() {
                        let window: Vec<Vec<f64>> = rows.iter().map(|(a, b)| std::iter::once(a[k]).chain(b.iter().copied()).collect()).collect();
                        sum += m.predict(&window).at("forecast")?;
                    }
                    sum
                }
            };
            history.push(p);
            if let Some(b) = &self.art.boundaries {
                extra.push(components_at_end(&history, b)?);
            }
            last = p;
        }
        Ok(last)
    }
}

/// Forecasts every test period at each horizon: the value at test index
/// `j` for horizon `h` is predicted from origin `j - h` using observed data
/// up to the origin only.
pub fn forecast_scenario(art: &ScenarioArtifacts, bundle: &Bundle, horizons: &[usize], norm_low: f64) -> Result<Vec<HorizonForecast>> {
    let f = Forecaster::new(art, bundle, norm_low)?;
    let n = bundle.target.len();
    horizons
        .iter()
        .map(|&h| {
            let mut out = HorizonForecast { horizon: h, index: Vec::new(), observed: Vec::new(), predicted: Vec::new() };
            for j in art.train_len..n {
                let origin = j.checked_sub(h).ok_or_else(|| PipelineError::TooShort(format!("horizon {h} reaches before the series")))?;
                let p = f.forecast(origin, h)?;
                out.index.push(j);
                out.observed.push(bundle.target.values()[j]);
                out.predicted.push(art.target_norm.invert(p));
            }
            Ok(out)
        })
        .collect()
}

pub fn fingerprint(model: &TrainedModel) -> String {
    let bytes: Vec<u8> = model.params.to_flat().iter().flat_map(|v| v.to_le_bytes()).collect();
    format!("{:016x}", seeds::fnv1a(&bytes))
}

pub fn evaluate_scenario(art: &ScenarioArtifacts, bundle: &Bundle, forecasts: &[HorizonForecast]) -> Result<ScenarioResult> {
    let metrics = forecasts
        .iter()
        .map(|f| {
            let e = evaluate(&f.observed, &f.predicted).at("evaluate")?;
            Ok(HorizonMetrics {
                horizon: f.horizon,
                mape: e.mape,
                rmse: e.rmse,
                rmsre: e.rmsre,
                periods: f.index.iter().map(|&j| bundle.target.period(j).to_string()).collect(),
                observed: f.observed.clone(),
                predicted: f.predicted.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let model = &art.models[0];
    Ok(ScenarioResult {
        label: art.label.clone(),
        scenario: art.scenario,
        seed: art.seed,
        window_mode: art.window_mode,
        train_len: art.train_len,
        test_len: bundle.target.len() - art.train_len,
        metrics,
        leaders: art.leaders.clone(),
        components: art.boundaries.as_ref().map(|b| b.num_bands()),
        feature_columns: art.columns.clone(),
        column_factors: art.column_factors.clone(),
        network: model.spec.clone(),
        models: art
            .models
            .iter()
            .map(|m| ModelSummary { fingerprint: fingerprint(m), num_params: m.params.num_params(), best_epoch: m.best_epoch, epochs: m.train_loss.len(), seed: m.seed })
            .collect(),
        tuning: art.tuning.as_ref().map(|h| TuningSummary { budget: h.budget, best_loss: h.best_loss, best_iteration: h.best_iteration, best_point: h.best_point.clone() }),
    })
}

/// Fit, forecast and evaluate one scenario.
pub fn run_scenario(config: &PipelineConfig, bundle: &Bundle, scenario: Scenario) -> Result<ScenarioResult> {
    let art = fit_scenario(config, bundle, scenario)?;
    let forecasts = forecast_scenario(&art, bundle, &config.horizons, config.norm_low)?;
    evaluate_scenario(&art, bundle, &forecasts)
}

/// Runs every cell of the configured grid. Cells are independent and run
/// on separate threads; each seeds itself from its label, so the report
/// does not depend on scheduling.
pub fn run_pipeline(config: &PipelineConfig, bundle: &Bundle) -> Result<ForecastReport> {
    config.validate()?;
    let scenarios = Scenario::grid(config);
    let results: Vec<Result<ScenarioResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = scenarios.iter().map(|&sc| s.spawn(move || run_scenario(config, bundle, sc))).collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    let scenarios = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ForecastReport::new(config, bundle, scenarios))
}
