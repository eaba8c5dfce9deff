//! Input bundle on disk: a directory holding `target.csv`, and optionally
//! `features.csv` with `attribution.csv`, and `nodes.csv` with `edges.csv`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::features::{read_attribution_csv, read_features_csv, write_attribution_csv, write_features_csv, FeatureTable};
use super::{AtStage, PipelineError, Result};
use crate::leaders::{read_graph_csv, write_graph_csv, SocialGraph};
use crate::series::{read_series_csv, write_series_csv, TimeSeries};

pub const TARGET_FILE: &str = "target.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const ATTRIBUTION_FILE: &str = "attribution.csv";
pub const NODES_FILE: &str = "nodes.csv";
pub const EDGES_FILE: &str = "edges.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub target: TimeSeries,
    /// Aligned with `target` period by period; may have no columns.
    pub features: FeatureTable,
    pub graph: Option<SocialGraph>,
}

impl Bundle {
    /// Resamples weekly features to months when the target is monthly and
    /// checks that both cover the same periods.
    pub fn new(target: TimeSeries, features: FeatureTable, graph: Option<SocialGraph>) -> Result<Self> {
        features.validate()?;
        let features = if features.start.frequency() != target.frequency() { features.to_monthly()? } else { features };
        features.check_alignment(target.start, target.len())?;
        if let Some(g) = &graph {
            for c in &features.columns {
                if let Some(id) = c.contributors.iter().find(|id| g.node_index(id).is_err()) {
                    log::warn!("column {} is attributed to node {id}, which is not in the graph", c.name());
                }
            }
        }
        Ok(Self { target, features, graph })
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
}

pub fn load_bundle(dir: &Path) -> Result<Bundle> {
    let target = read_series_csv(open(&dir.join(TARGET_FILE))?, "target").at("load target")?;
    let features_path = dir.join(FEATURES_FILE);
    let mut features = if features_path.exists() { read_features_csv(open(&features_path)?)? } else { FeatureTable::empty(target.start, target.len()) };
    let attribution = dir.join(ATTRIBUTION_FILE);
    if attribution.exists() {
        read_attribution_csv(open(&attribution)?, &mut features)?;
    }
    let nodes = dir.join(NODES_FILE);
    let graph = if nodes.exists() { Some(read_graph_csv(open(&nodes)?, open(&dir.join(EDGES_FILE))?).at("load graph")?) } else { None };
    Bundle::new(target, features, graph)
}

pub fn save_bundle(bundle: &Bundle, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_series_csv(create(&dir.join(TARGET_FILE))?, &bundle.target).at("save target")?;
    if !bundle.features.columns.is_empty() {
        write_features_csv(create(&dir.join(FEATURES_FILE))?, &bundle.features)?;
        if bundle.features.has_attribution() {
            write_attribution_csv(create(&dir.join(ATTRIBUTION_FILE))?, &bundle.features)?;
        }
    }
    if let Some(g) = &bundle.graph {
        write_graph_csv(g, create(&dir.join(NODES_FILE))?, create(&dir.join(EDGES_FILE))?).at("save graph")?;
    }
    Ok(())
}
