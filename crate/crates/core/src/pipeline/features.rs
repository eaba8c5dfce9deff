//! Social-media feature tables: per-period, per-platform attention
//! (volume) and endorsement (valence) columns, with optional attribution of
//! each column to the graph nodes that produced it.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::leaders::LeaderWeights;
use crate::series::{Frequency, Period};

/// Attention columns, in canonical order.
pub const VOLUME_COLUMNS: [&str; 4] = ["num_comments", "num_posts", "num_likes", "num_shares"];
/// Endorsement columns, in canonical order.
pub const VALENCE_COLUMNS: [&str; 3] = ["avg_comment_length", "avg_sentiment", "avg_polarity"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Volume,
    Valence,
}

impl FeatureKind {
    pub fn of(feature: &str) -> Option<Self> {
        if VOLUME_COLUMNS.contains(&feature) {
            Some(FeatureKind::Volume)
        } else if VALENCE_COLUMNS.contains(&feature) {
            Some(FeatureKind::Valence)
        } else {
            None
        }
    }
}

/// Which feature families enter the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    #[default]
    Full,
    AttentionOnly,
    EndorsementOnly,
    None,
}

impl FeatureMode {
    pub fn includes(self, kind: FeatureKind) -> bool {
        matches!(
            (self, kind),
            (FeatureMode::Full, _) | (FeatureMode::AttentionOnly, FeatureKind::Volume) | (FeatureMode::EndorsementOnly, FeatureKind::Valence)
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureMode::Full => "full",
            FeatureMode::AttentionOnly => "attention_only",
            FeatureMode::EndorsementOnly => "endorsement_only",
            FeatureMode::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub platform: String,
    pub feature: String,
    pub values: Vec<f64>,
    /// Ids of graph nodes whose activity this column aggregates.
    pub contributors: Vec<String>,
}

impl FeatureColumn {
    /// `platform.feature`
    pub fn name(&self) -> String {
        format!("{}.{}", self.platform, self.feature)
    }

    pub fn kind(&self) -> FeatureKind {
        FeatureKind::of(&self.feature).expect("validated feature name")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub start: Period,
    pub len: usize,
    pub columns: Vec<FeatureColumn>,
}

impl FeatureTable {
    /// A table with no columns covering `len` periods.
    pub fn empty(start: Period, len: usize) -> Self {
        Self { start, len, columns: Vec::new() }
    }

    pub fn period(&self, i: usize) -> Period {
        self.start.offset(i as i64)
    }

    /// Checks column names, lengths and value bounds: counts and comment
    /// lengths non-negative, sentiment and polarity within [-1, 1].
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.columns {
            let name = c.name();
            if FeatureKind::of(&c.feature).is_none() {
                return Err(PipelineError::Parse { what: "features".into(), line: 1, msg: format!("unknown feature column `{name}`") });
            }
            if c.platform.is_empty() || c.platform.contains(['.', ',']) {
                return Err(PipelineError::Parse { what: "features".into(), line: 1, msg: format!("bad platform name in `{name}`") });
            }
            if !seen.insert(name.clone()) {
                return Err(PipelineError::Parse { what: "features".into(), line: 1, msg: format!("duplicate column `{name}`") });
            }
            if c.values.len() != self.len {
                return Err(PipelineError::Parse { what: "features".into(), line: 1, msg: format!("column `{name}` has {} values, expected {}", c.values.len(), self.len) });
            }
            let bounded = matches!(c.feature.as_str(), "avg_sentiment" | "avg_polarity");
            for (i, &v) in c.values.iter().enumerate() {
                let ok = v.is_finite() && if bounded { (-1.0..=1.0).contains(&v) } else { v >= 0.0 };
                if !ok {
                    return Err(PipelineError::Parse {
                        what: "features".into(),
                        line: i + 2,
                        msg: format!("`{name}` = {v} at {} violates its bounds", self.period(i)),
                    });
                }
            }
        }
        Ok(())
    }

    /// Columns selected by `mode`, in table order.
    pub fn select(&self, mode: FeatureMode) -> FeatureTable {
        FeatureTable { start: self.start, len: self.len, columns: self.columns.iter().filter(|c| mode.includes(c.kind())).cloned().collect() }
    }

    pub fn has_attribution(&self) -> bool {
        self.columns.iter().any(|c| !c.contributors.is_empty())
    }

    /// Value of every column at period index `t`.
    pub fn row(&self, t: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.values[t]).collect()
    }

    /// Restricts the table to periods `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> FeatureTable {
        FeatureTable {
            start: self.period(from),
            len: to - from,
            columns: self.columns.iter().map(|c| FeatureColumn { values: c.values[from..to].to_vec(), ..c.clone() }).collect(),
        }
    }

    /// Averages weekly rows into calendar months (a week belongs to the
    /// month containing its Thursday). Monthly tables are returned as is.
    pub fn to_monthly(&self) -> Result<FeatureTable> {
        if self.start.frequency() == Frequency::Monthly {
            return Ok(self.clone());
        }
        let mut months: BTreeMap<i64, (Period, Vec<usize>)> = BTreeMap::new();
        for i in 0..self.len {
            let m = self.period(i).month();
            months.entry(m.index()).or_insert_with(|| (m, Vec::new())).1.push(i);
        }
        let (start, _) = months.values().next().ok_or_else(|| PipelineError::Alignment("weekly feature table is empty".into()))?.clone();
        let groups: Vec<Vec<usize>> = months.into_values().map(|(_, rows)| rows).collect();
        let columns = self
            .columns
            .iter()
            .map(|c| FeatureColumn {
                values: groups.iter().map(|rows| rows.iter().map(|&i| c.values[i]).sum::<f64>() / rows.len() as f64).collect(),
                ..c.clone()
            })
            .collect();
        Ok(FeatureTable { start, len: groups.len(), columns })
    }

    /// Checks that the table covers exactly `len` periods from `start`,
    /// naming the first period that does not line up.
    pub fn check_alignment(&self, start: Period, len: usize) -> Result<()> {
        if self.start.frequency() != start.frequency() {
            return Err(PipelineError::Alignment(format!("feature periods are {:?}, target periods are {:?}", self.start.frequency(), start.frequency())));
        }
        let offset = self.start.index() - start.index();
        if offset > 0 {
            return Err(PipelineError::Alignment(format!("feature table is missing period {}", start)));
        }
        if offset < 0 {
            return Err(PipelineError::Alignment(format!("feature table has extra period {} before the target starts", self.start)));
        }
        if self.len < len {
            return Err(PipelineError::Alignment(format!("feature table is missing period {}", start.offset(self.len as i64))));
        }
        if self.len > len {
            return Err(PipelineError::Alignment(format!("feature table has extra period {} after the target ends", start.offset(len as i64))));
        }
        Ok(())
    }
}

/// Scales each attributed column by the mean signed weight of its
/// contributing nodes. Columns without contributors, and every column when
/// the table carries no attribution at all, are left unchanged.
pub fn apply_leader_weights(features: &FeatureTable, weights: &LeaderWeights) -> FeatureTable {
    if !features.columns.is_empty() && !features.has_attribution() {
        log::warn!("feature table has no node attribution; leader weighting is a no-op");
    }
    let mut out = features.clone();
    for c in &mut out.columns {
        let factor = leader_factor(c, weights);
        for v in &mut c.values {
            *v *= factor;
        }
    }
    out
}

/// Mean signed weight of the column's contributors; 1 without any.
pub fn leader_factor(column: &FeatureColumn, weights: &LeaderWeights) -> f64 {
    if column.contributors.is_empty() {
        return 1.0;
    }
    column.contributors.iter().map(|id| weights.weight(id)).sum::<f64>() / column.contributors.len() as f64
}

fn csv_err(what: &str, e: csv::Error) -> PipelineError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    PipelineError::Parse { what: what.into(), line, msg: e.to_string() }
}

/// Reads a wide `period,<platform>.<feature>,...` table. Periods must be
/// consecutive; bounds are checked.
pub fn read_features_csv<R: Read>(reader: R) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err("features", e))?.clone();
    if headers.get(0) != Some("period") {
        return Err(PipelineError::Parse { what: "features".into(), line: 1, msg: "first column must be `period`".into() });
    }
    let mut columns = Vec::new();
    for h in headers.iter().skip(1) {
        let (platform, feature) = h.split_once('.').ok_or_else(|| PipelineError::Parse { what: "features".into(), line: 1, msg: format!("column `{h}` is not `platform.feature`") })?;
        columns.push(FeatureColumn { platform: platform.into(), feature: feature.into(), values: Vec::new(), contributors: Vec::new() });
    }
    let mut start: Option<Period> = None;
    let mut prev: Option<Period> = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_err("features", e))?;
        let bad = |msg: String| PipelineError::Parse { what: "features".into(), line, msg };
        let period: Period = rec[0].parse().map_err(|e: crate::series::SeriesError| bad(e.to_string()))?;
        if let Some(p) = prev {
            if period.frequency() == p.frequency() && period.index() > p.index() + 1 {
                return Err(PipelineError::Alignment(format!("feature table is missing period {} (line {line})", p.next())));
            }
            if period.frequency() != p.frequency() || period.index() != p.index() + 1 {
                return Err(bad(format!("period {period} does not follow {p}")));
            }
        }
        start.get_or_insert(period);
        prev = Some(period);
        for (c, cell) in columns.iter_mut().zip(rec.iter().skip(1)) {
            c.values.push(cell.parse().map_err(|_| bad(format!("cannot parse `{cell}` in `{}`", c.name())))?);
        }
    }
    let start = start.ok_or_else(|| PipelineError::Parse { what: "features".into(), line: 2, msg: "no rows".into() })?;
    let len = prev.map_or(0, |p| (p.index() - start.index() + 1) as usize);
    let table = FeatureTable { start, len, columns };
    table.validate()?;
    Ok(table)
}

pub fn write_features_csv<W: Write>(writer: W, table: &FeatureTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["period".to_string()];
    header.extend(table.columns.iter().map(FeatureColumn::name));
    w.write_record(&header).map_err(|e| csv_err("features", e))?;
    for t in 0..table.len {
        let mut row = vec![table.period(t).to_string()];
        row.extend(table.columns.iter().map(|c| c.values[t].to_string()));
        w.write_record(&row).map_err(|e| csv_err("features", e))?;
    }
    w.flush().map_err(|e| PipelineError::Io(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct AttributionRow {
    column: String,
    nodes: String,
}

/// Reads `column,nodes` rows, with node ids separated by `;`, into the
/// matching columns of `table`.
pub fn read_attribution_csv<R: Read>(reader: R, table: &mut FeatureTable) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for (i, row) in rdr.deserialize::<AttributionRow>().enumerate() {
        let row = row.map_err(|e| csv_err("attribution", e))?;
        let col = table
            .columns
            .iter_mut()
            .find(|c| c.name() == row.column)
            .ok_or_else(|| PipelineError::Parse { what: "attribution".into(), line: i + 2, msg: format!("unknown column `{}`", row.column) })?;
        col.contributors = row.nodes.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    }
    Ok(())
}

pub fn write_attribution_csv<W: Write>(writer: W, table: &FeatureTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for c in table.columns.iter().filter(|c| !c.contributors.is_empty()) {
        w.serialize(AttributionRow { column: c.name(), nodes: c.contributors.join(";") }).map_err(|e| csv_err("attribution", e))?;
    }
    w.flush().map_err(|e| PipelineError::Io(e.to_string()))
}
