//! Test-set metrics per scenario and horizon, pairwise relative
//! improvements, and their JSON / CSV / text renderings.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bundle::Bundle;
use super::config::{PipelineConfig, WindowMode};
use super::run::Scenario;
use super::{PipelineError, Result};
use crate::forecaster::NetworkSpec;
use crate::hyperopt::Point;
use crate::series::improvement_pct;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mape,
    Rmse,
    Rmsre,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Mape, Metric::Rmse, Metric::Rmsre];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mape => "mape",
            Metric::Rmse => "rmse",
            Metric::Rmsre => "rmsre",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics {
    pub horizon: usize,
    /// Percent.
    pub mape: f64,
    pub rmse: f64,
    pub rmsre: f64,
    pub periods: Vec<String>,
    pub observed: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl HorizonMetrics {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Mape => self.mape,
            Metric::Rmse => self.rmse,
            Metric::Rmsre => self.rmsre,
        }
    }

    pub fn set(&mut self, m: Metric, v: f64) {
        match m {
            Metric::Mape => self.mape = v,
            Metric::Rmse => self.rmse = v,
            Metric::Rmsre => self.rmsre = v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    /// FNV-1a of the parameter bits.
    pub fingerprint: String,
    pub num_params: usize,
    pub best_epoch: usize,
    pub epochs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningSummary {
    pub budget: usize,
    pub best_loss: f64,
    pub best_iteration: usize,
    pub best_point: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub label: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub window_mode: WindowMode,
    pub train_len: usize,
    pub test_len: usize,
    pub metrics: Vec<HorizonMetrics>,
    pub leaders: Option<Vec<String>>,
    pub components: Option<usize>,
    pub feature_columns: Vec<String>,
    pub column_factors: Vec<f64>,
    pub network: NetworkSpec,
    pub models: Vec<ModelSummary>,
    pub tuning: Option<TuningSummary>,
}

impl ScenarioResult {
    pub fn horizon(&self, h: usize) -> Option<&HorizonMetrics> {
        self.metrics.iter().find(|m| m.horizon == h)
    }
}

/// Relative improvement of `scenario` over `baseline`:
/// `(baseline_value - value) / baseline_value * 100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub scenario: String,
    pub baseline: String,
    pub horizon: usize,
    pub metric: Metric,
    pub baseline_value: f64,
    pub value: f64,
    pub improvement_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub version: String,
    pub master_seed: u64,
    pub series_start: String,
    pub series_length: usize,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub metadata: ReportMetadata,
    pub scenarios: Vec<ScenarioResult>,
    pub improvements: Vec<Improvement>,
}

/// Every ordered pair of distinct scenarios, per shared horizon and metric.
/// Pairs whose baseline metric is not positive are skipped.
pub fn compute_improvements(scenarios: &[ScenarioResult]) -> Vec<Improvement> {
    let mut out = Vec::new();
    for a in scenarios {
        for b in scenarios.iter().filter(|b| b.label != a.label) {
            for ma in &a.metrics {
                let Some(mb) = b.horizon(ma.horizon) else { continue };
                for m in Metric::ALL {
                    if let Ok(pct) = improvement_pct(mb.get(m), ma.get(m)) {
                        out.push(Improvement {
                            scenario: a.label.clone(),
                            baseline: b.label.clone(),
                            horizon: ma.horizon,
                            metric: m,
                            baseline_value: mb.get(m),
                            value: ma.get(m),
                            improvement_pct: pct,
                        });
                    }
                }
            }
        }
    }
    out
}

impl ForecastReport {
    pub fn new(config: &PipelineConfig, bundle: &Bundle, scenarios: Vec<ScenarioResult>) -> Self {
        Self {
            metadata: ReportMetadata {
                version: env!("CARGO_PKG_VERSION").to_string(),
                master_seed: config.master_seed,
                series_start: bundle.target.start.to_string(),
                series_length: bundle.target.len(),
                config: config.clone(),
            },
            improvements: compute_improvements(&scenarios),
            scenarios,
        }
    }

    pub fn scenario(&self, label: &str) -> Option<&ScenarioResult> {
        self.scenarios.iter().find(|s| s.label == label)
    }

    pub fn improvement(&self, scenario: &str, baseline: &str, horizon: usize, metric: Metric) -> Option<&Improvement> {
        self.improvements.iter().find(|i| i.scenario == scenario && i.baseline == baseline && i.horizon == horizon && i.metric == metric)
    }

    /// Copy with the improvement table rebuilt from the stored metrics.
    pub fn recomputed(&self) -> Self {
        Self { improvements: compute_improvements(&self.scenarios), ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| PipelineError::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PipelineError::Parse { what: "report".into(), line: e.line(), msg: e.to_string() })
    }

    /// One row per number in the report.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        let row = |record: &str, scenario: &str| ReportRow { record: record.into(), scenario: scenario.into(), ..ReportRow::default() };
        for s in &self.scenarios {
            rows.push(ReportRow { value: s.seed.to_string(), ..row("seed", &s.label) });
            for m in &s.metrics {
                for metric in Metric::ALL {
                    rows.push(ReportRow { horizon: Some(m.horizon), metric: metric.name().into(), value: m.get(metric).to_string(), ..row("metric", &s.label) });
                }
                for (record, values) in [("observed", &m.observed), ("predicted", &m.predicted)] {
                    for (i, v) in values.iter().enumerate() {
                        rows.push(ReportRow { horizon: Some(m.horizon), index: Some(i), value: v.to_string(), ..row(record, &s.label) });
                    }
                }
            }
        }
        for imp in &self.improvements {
            rows.push(ReportRow {
                baseline: imp.baseline.clone(),
                horizon: Some(imp.horizon),
                metric: imp.metric.name().into(),
                value: imp.improvement_pct.to_string(),
                ..row("improvement", &imp.scenario)
            });
        }
        rows
    }

    /// Replaces every number in `self` with the matching CSV row; the
    /// improvement table is rebuilt from the rows, taking its metric pairs
    /// from the rebuilt scenario metrics.
    pub fn with_rows(&self, rows: &[ReportRow]) -> Result<Self> {
        let mut out = self.clone();
        out.improvements.clear();
        let bad = |line: usize, msg: String| PipelineError::Parse { what: "report csv".into(), line, msg };
        let num = |line: usize, v: &str| v.parse::<f64>().map_err(|_| bad(line, format!("`{v}` is not a number")));
        let mut pending = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let line = i + 2;
            if r.record == "improvement" {
                pending.push((line, r));
                continue;
            }
            let s = out.scenarios.iter_mut().find(|s| s.label == r.scenario).ok_or_else(|| bad(line, format!("unknown scenario {}", r.scenario)))?;
            if r.record == "seed" {
                s.seed = r.value.parse().map_err(|_| bad(line, format!("bad seed {}", r.value)))?;
                continue;
            }
            let h = r.horizon.ok_or_else(|| bad(line, "missing horizon".into()))?;
            let m = s.metrics.iter_mut().find(|m| m.horizon == h).ok_or_else(|| bad(line, format!("unknown horizon {h}")))?;
            let v = num(line, &r.value)?;
            match r.record.as_str() {
                "metric" => m.set(Metric::parse(&r.metric).ok_or_else(|| bad(line, format!("unknown metric {}", r.metric)))?, v),
                "observed" | "predicted" => {
                    let target = if r.record == "observed" { &mut m.observed } else { &mut m.predicted };
                    let slot = r.index.and_then(|k| target.get_mut(k)).ok_or_else(|| bad(line, "index out of range".into()))?;
                    *slot = v;
                }
                other => return Err(bad(line, format!("unknown record {other}"))),
            }
        }
        for (line, r) in pending {
            let metric = Metric::parse(&r.metric).ok_or_else(|| bad(line, format!("unknown metric {}", r.metric)))?;
            let h = r.horizon.ok_or_else(|| bad(line, "missing horizon".into()))?;
            let lookup = |label: &str| out.scenario(label).and_then(|s| s.horizon(h)).map(|m| m.get(metric)).ok_or_else(|| bad(line, format!("no metrics for {label} at horizon {h}")));
            let imp = Improvement {
                scenario: r.scenario.clone(),
                baseline: r.baseline.clone(),
                horizon: h,
                metric,
                baseline_value: lookup(&r.baseline)?,
                value: lookup(&r.scenario)?,
                improvement_pct: num(line, &r.value)?,
            };
            out.improvements.push(imp);
        }
        Ok(out)
    }
}

/// Long-format CSV record. `record` is one of `seed`, `metric`,
/// `observed`, `predicted` or `improvement`; unused fields are empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportRow {
    pub record: String,
    pub scenario: String,
    pub baseline: String,
    pub horizon: Option<usize>,
    pub metric: String,
    pub index: Option<usize>,
    pub value: String,
}

pub fn write_report_csv<W: Write>(writer: W, report: &ForecastReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in report.rows() {
        w.serialize(r).map_err(|e| PipelineError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| PipelineError::Parse { what: "report csv".into(), line: i + 2, msg: e.to_string() }))
        .collect()
}

/// Fixed-width tables: metrics per horizon, then for each horizon and
/// metric the improvement of each row scenario over each column scenario.
pub fn render_text(report: &ForecastReport) -> String {
    let mut s = String::new();
    let md = &report.metadata;
    let _ = writeln!(s, "Forecast report: {} periods from {}, master seed {}, version {}", md.series_length, md.series_start, md.master_seed, md.version);
    let labels: Vec<&str> = report.scenarios.iter().map(|s| s.label.as_str()).collect();
    let width = labels.iter().map(|l| l.len()).max().unwrap_or(8).max(8);
    let mut horizons: Vec<usize> = report.scenarios.iter().flat_map(|s| s.metrics.iter().map(|m| m.horizon)).collect();
    horizons.sort_unstable();
    horizons.dedup();
    for &h in &horizons {
        let _ = writeln!(s, "\nHorizon {h}");
        let _ = writeln!(s, "{:<width$}  {:>10}  {:>12}  {:>10}", "scenario", "MAPE (%)", "RMSE", "RMSRE");
        for sc in &report.scenarios {
            if let Some(m) = sc.horizon(h) {
                let _ = writeln!(s, "{:<width$}  {:>10.4}  {:>12.4}  {:>10.4}", sc.label, m.mape, m.rmse, m.rmsre);
            }
        }
    }
    if labels.len() > 1 {
        for &h in &horizons {
            for metric in Metric::ALL {
                let _ = writeln!(s, "\nRelative improvement (%) of row over column, {}, horizon {h}", metric.name().to_uppercase());
                let _ = write!(s, "{:<width$}", "");
                for (j, _) in labels.iter().enumerate() {
                    let _ = write!(s, "  {:>9}", format!("[{}]", j + 1));
                }
                s.push('\n');
                for (i, a) in labels.iter().enumerate() {
                    let _ = write!(s, "{:<width$}", format!("[{}] {a}", i + 1));
                    for b in &labels {
                        let cell = if a == b { "-".to_string() } else { report.improvement(a, b, h, metric).map_or("n/a".into(), |x| format!("{:.2}", x.improvement_pct)) };
                        let _ = write!(s, "  {cell:>9}");
                    }
                    s.push('\n');
                }
            }
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Text];

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Json => "report.json",
            ReportFormat::Csv => "report.csv",
            ReportFormat::Text => "report.txt",
        }
    }
}

/// Writes the requested renderings into `dir`, recomputing every
/// improvement from its stored metric pair first. Returns the paths.
pub fn emit_report(report: &ForecastReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let report = report.recomputed();
    let mut paths = Vec::new();
    for &f in formats {
        let path = dir.join(f.file_name());
        match f {
            ReportFormat::Json => std::fs::write(&path, report.to_json()?)?,
            ReportFormat::Csv => write_report_csv(std::io::BufWriter::new(std::fs::File::create(&path)?), &report)?,
            ReportFormat::Text => std::fs::write(&path, render_text(&report))?,
        }
        paths.push(path);
    }
    Ok(paths)
}
