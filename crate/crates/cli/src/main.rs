//! Command-line front end. Each stage reads and writes plain files, so a run
//! can be inspected or resumed between stages; `run` does everything at once.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hybridcast::ewt::decompose;
use hybridcast::leaders::write_weights_csv;
use hybridcast::pipeline::{
    emit_report, evaluate_scenario, fit_scenario, forecast_scenario, generate_synthetic, leader_weights, load_bundle, render_text, run_pipeline, save_bundle, tune_scenario,
    Bundle, ForecastReport, HorizonForecast, PipelineConfig, ReportFormat, Scenario, ScenarioArtifacts, SyntheticSpec,
};

#[derive(Parser)]
#[command(name = "hybridcast", version, about = "Opinion-leader-weighted, EWT-decomposed BiLSTM demand forecasting")]
struct Cli {
    /// Master seed; overrides `master_seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Pipeline configuration (TOML). Keys left out keep their defaults;
    /// unknown keys are errors.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for everything the command writes.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic bundle and its ground truth (truth.json).
    Simulate {
        #[arg(long, value_enum, default_value_t = Preset::PlantedLeaders)]
        preset: Preset,
        /// Generator settings (TOML); replaces the preset.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Decompose the whole target series (components.csv, boundaries.json).
    Decompose {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Detect the leader coalition and its weights (leaders.json, weights.csv).
    DetectLeaders {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Search hyperparameters for the configured scenario (bo_history.csv,
    /// tuned.toml).
    Tune {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Fit the configured scenario on the training segment (artifacts.json).
    Train {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Forecast the test segment from trained artifacts (forecasts.json,
    /// forecasts.csv).
    Forecast {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        artifacts: PathBuf,
    },
    /// Score forecasts on the test segment (report.json).
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long)]
        forecasts: PathBuf,
    },
    /// Merge report.json files and render them, recomputing improvements.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "json,csv,text")]
        format: Vec<Format>,
    },
    /// The full pipeline over the configured scenario grid.
    Run {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "json,csv,text")]
        format: Vec<Format>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    PlantedLeaders,
    SeasonalTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
            Format::Text => ReportFormat::Text,
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn bundle_at(dir: &Path) -> Result<Bundle> {
    load_bundle(dir).with_context(|| format!("loading bundle from {}", dir.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let out = cli.out.clone();
    match &cli.command {
        Command::Simulate { preset, spec } => {
            let spec = match spec {
                Some(path) => SyntheticSpec::load(path)?,
                None => match preset {
                    Preset::PlantedLeaders => SyntheticSpec::planted_leaders(),
                    Preset::SeasonalTrend => SyntheticSpec::seasonal_trend(),
                },
            };
            let (bundle, truth) = generate_synthetic(&spec, cli.seed.unwrap_or(0))?;
            save_bundle(&bundle, &out)?;
            write_json(&out.join("truth.json"), &truth)?;
        }
        Command::Decompose { bundle } => {
            let cfg = load_config(&cli)?;
            let bundle = bundle_at(bundle)?;
            let d = decompose(bundle.target.values(), &cfg.ewt)?;
            let mut w = csv::Writer::from_path(out.join("components.csv"))?;
            let mut header = vec!["period".to_string(), "observed".to_string()];
            header.extend((0..d.components.len()).map(|k| format!("component_{k}")));
            w.write_record(&header)?;
            for (t, y) in bundle.target.values().iter().enumerate() {
                let mut row = vec![bundle.target.period(t).to_string(), y.to_string()];
                row.extend(d.components.iter().map(|c| c[t].to_string()));
                w.write_record(&row)?;
            }
            w.flush()?;
            log::info!("wrote {} components to {}", d.components.len(), out.join("components.csv").display());
            write_json(&out.join("boundaries.json"), &d.boundaries)?;
        }
        Command::DetectLeaders { bundle } => {
            let cfg = load_config(&cli)?;
            let bundle = bundle_at(bundle)?;
            let (report, weights) = leader_weights(&cfg, &bundle)?;
            println!("leaders: {} (phi {:.4})", report.coalition.members.join(", "), report.coalition.phi);
            write_json(&out.join("leaders.json"), &report)?;
            write_weights_csv(&weights, BufWriter::new(File::create(out.join("weights.csv"))?))?;
            log::info!("wrote {}", out.join("weights.csv").display());
        }
        Command::Tune { bundle } => {
            let cfg = load_config(&cli)?;
            if cfg.tuning.budget == 0 {
                bail!("tuning budget is 0; set [tuning] budget in the configuration");
            }
            let bundle = bundle_at(bundle)?;
            let (history, tuned) = tune_scenario(&cfg, &bundle, Scenario::from_config(&cfg))?;
            history.write_csv(&out.join("bo_history.csv"))?;
            log::info!("wrote {}", out.join("bo_history.csv").display());
            println!("best loss {:.6} at iteration {}", history.best_loss, history.best_iteration);
            write_text(&out.join("tuned.toml"), &tuned.to_toml_string()?)?;
        }
        Command::Train { bundle } => {
            let cfg = load_config(&cli)?;
            let bundle = bundle_at(bundle)?;
            let art = fit_scenario(&cfg, &bundle, Scenario::from_config(&cfg))?;
            write_json(&out.join("artifacts.json"), &art)?;
        }
        Command::Forecast { bundle, artifacts } => {
            let cfg = load_config(&cli)?;
            let bundle = bundle_at(bundle)?;
            let art: ScenarioArtifacts = read_json(artifacts)?;
            let forecasts = forecast_scenario(&art, &bundle, &cfg.horizons, cfg.norm_low)?;
            write_json(&out.join("forecasts.json"), &forecasts)?;
            let mut w = csv::Writer::from_path(out.join("forecasts.csv"))?;
            w.write_record(["horizon", "period", "observed", "predicted"])?;
            for f in &forecasts {
                for ((j, o), p) in f.index.iter().zip(&f.observed).zip(&f.predicted) {
                    w.write_record([f.horizon.to_string(), bundle.target.period(*j).to_string(), o.to_string(), p.to_string()])?;
                }
            }
            w.flush()?;
            log::info!("wrote {}", out.join("forecasts.csv").display());
        }
        Command::Evaluate { bundle, artifacts, forecasts } => {
            let cfg = load_config(&cli)?;
            let bundle = bundle_at(bundle)?;
            let art: ScenarioArtifacts = read_json(artifacts)?;
            let forecasts: Vec<HorizonForecast> = read_json(forecasts)?;
            let result = evaluate_scenario(&art, &bundle, &forecasts)?;
            let report = ForecastReport::new(&cfg, &bundle, vec![result]);
            emit_report(&report, &out, &[ReportFormat::Json])?;
            print!("{}", render_text(&report));
        }
        Command::Report { inputs, format } => {
            let mut merged: Option<ForecastReport> = None;
            for path in inputs {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let report = ForecastReport::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
                match &mut merged {
                    None => merged = Some(report),
                    Some(m) => {
                        for s in report.scenarios {
                            if m.scenario(&s.label).is_some() {
                                bail!("scenario {} appears in more than one report", s.label);
                            }
                            m.scenarios.push(s);
                        }
                    }
                }
            }
            let report = merged.expect("clap requires at least one input");
            let formats: Vec<ReportFormat> = format.iter().map(|&f| f.into()).collect();
            for path in emit_report(&report, &out, &formats)? {
                log::info!("wrote {}", path.display());
            }
        }
        Command::Run { bundle, format } => {
            let cfg = load_config(&cli)?;
            let bundle = bundle_at(bundle)?;
            let report = run_pipeline(&cfg, &bundle)?;
            let formats: Vec<ReportFormat> = format.iter().map(|&f| f.into()).collect();
            for path in emit_report(&report, &out, &formats)? {
                log::info!("wrote {}", path.display());
            }
            print!("{}", render_text(&report.recomputed()));
        }
    }
    Ok(())
}
