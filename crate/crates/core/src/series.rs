//! Time-series container, min-max scaling, temporal splitting and the
//! forecast error metrics (MAPE, RMSE, RMSRE) plus the relative
//! improvement statistic used to compare two configurations.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series is constant (min == max == {0}); cannot normalize")]
    DegenerateSeries(f64),
    #[error("observed value at index {0} is zero; MAPE/RMSRE undefined")]
    ZeroObserved(usize),
    #[error("length mismatch: {left} observed vs {right} predicted")]
    LengthMismatch { left: usize, right: usize },
    #[error("baseline metric must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("invalid split: test_length {test_length} for series of length {len}")]
    InvalidSplit { test_length: usize, len: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("series needs at least {need} values, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("invalid target interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("bad period `{0}`")]
    BadPeriod(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for SeriesError {
    fn from(e: std::io::Error) -> Self {
        SeriesError::Io(e.to_string())
    }
}

impl From<csv::Error> for SeriesError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        SeriesError::Parse { line, msg: e.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, SeriesError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Monthly,
    Weekly,
}

/// A calendar period. Monthly periods print as `YYYY-MM`, weekly periods
/// as ISO weeks `YYYY-Www`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Period {
    Monthly { year: i32, month: u32 },
    Weekly { year: i32, week: u32 },
}

impl Period {
    pub fn monthly(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(SeriesError::BadPeriod(format!("{year}-{month}")));
        }
        Ok(Period::Monthly { year, month })
    }

    pub fn weekly(year: i32, week: u32) -> Result<Self> {
        if NaiveDate::from_isoywd_opt(year, week, Weekday::Mon).is_none() {
            return Err(SeriesError::BadPeriod(format!("{year}-W{week:02}")));
        }
        Ok(Period::Weekly { year, week })
    }

    pub fn frequency(&self) -> Frequency {
        match self {
            Period::Monthly { .. } => Frequency::Monthly,
            Period::Weekly { .. } => Frequency::Weekly,
        }
    }

    /// Ordinal index; consecutive periods of one frequency differ by 1.
    pub fn index(&self) -> i64 {
        match *self {
            Period::Monthly { year, month } => year as i64 * 12 + (month as i64 - 1),
            Period::Weekly { year, week } => {
                let monday = NaiveDate::from_isoywd_opt(year, week, Weekday::Mon)
                    .expect("validated at construction");
                monday.num_days_from_ce() as i64 / 7
            }
        }
    }

    pub fn offset(&self, steps: i64) -> Period {
        match self.frequency() {
            Frequency::Monthly => {
                let idx = self.index() + steps;
                Period::Monthly { year: idx.div_euclid(12) as i32, month: idx.rem_euclid(12) as u32 + 1 }
            }
            Frequency::Weekly => {
                // Day 1 of the common era is a Monday.
                let days = (self.index() + steps) * 7 + 1;
                let date = NaiveDate::from_num_days_from_ce_opt(days as i32)
                    .expect("date in range")
                    .week(Weekday::Mon)
                    .first_day();
                let iso = date.iso_week();
                Period::Weekly { year: iso.year(), week: iso.week() }
            }
        }
    }

    pub fn next(&self) -> Period {
        self.offset(1)
    }

    /// Calendar month that contains this period. Weeks belong to the month
    /// of their Thursday (the ISO convention for assigning weeks to years).
    pub fn month(&self) -> Period {
        match *self {
            Period::Monthly { .. } => *self,
            Period::Weekly { year, week } => {
                let thu = NaiveDate::from_isoywd_opt(year, week, Weekday::Thu).expect("valid week");
                Period::Monthly { year: thu.year(), month: thu.month() }
            }
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Monthly { year, month } => write!(f, "{year:04}-{month:02}"),
            Period::Weekly { year, week } => write!(f, "{year:04}-W{week:02}"),
        }
    }
}

impl FromStr for Period {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || SeriesError::BadPeriod(s.to_string());
        let (y, rest) = s.trim().split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        if let Some(w) = rest.strip_prefix('W') {
            let week: u32 = w.parse().map_err(|_| bad())?;
            Period::weekly(year, week)
        } else {
            if rest.len() != 2 {
                return Err(bad());
            }
            let month: u32 = rest.parse().map_err(|_| bad())?;
            Period::monthly(year, month)
        }
    }
}

/// A uniformly sampled, finite-valued series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    pub start: Period,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series of at least two finite values.
    pub fn new(name: impl Into<String>, start: Period, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(SeriesError::TooShort { need: 2, got: values.len() });
        }
        Self::segment(name, start, values)
    }

    // Segments produced by `split` may hold a single point.
    fn segment(name: impl Into<String>, start: Period, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite(i));
        }
        Ok(Self { name: name.into(), start, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frequency(&self) -> Frequency {
        self.start.frequency()
    }

    pub fn period(&self, i: usize) -> Period {
        self.start.offset(i as i64)
    }

    pub fn periods(&self) -> impl Iterator<Item = Period> + '_ {
        (0..self.len()).map(move |i| self.period(i))
    }

    pub fn end(&self) -> Period {
        self.period(self.len() - 1)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::segment(self.name.clone(), self.start, values)
    }

    /// Concatenates `other` after `self`; `other` must start right after.
    pub fn concat(&self, other: &TimeSeries) -> Result<Self> {
        if other.start != self.end().next() {
            return Err(SeriesError::BadPeriod(format!("{} does not follow {}", other.start, self.end())));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::segment(self.name.clone(), self.start, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub x_min: f64,
    pub x_max: f64,
    pub x_low: f64,
    pub x_high: f64,
}

impl NormalizationParams {
    /// Fits the source range to `values`.
    pub fn fit(values: &[f64], x_low: f64, x_high: f64) -> Result<Self> {
        if !(x_low < x_high) || !x_low.is_finite() || !x_high.is_finite() {
            return Err(SeriesError::InvalidInterval(x_low, x_high));
        }
        if values.is_empty() {
            return Err(SeriesError::TooShort { need: 1, got: 0 });
        }
        let x_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let x_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if x_min == x_max {
            return Err(SeriesError::DegenerateSeries(x_min));
        }
        Ok(Self { x_min, x_max, x_low, x_high })
    }

    pub fn apply(&self, x: f64) -> f64 {
        if x == self.x_min {
            return self.x_low;
        }
        if x == self.x_max {
            return self.x_high;
        }
        (x - self.x_min) / (self.x_max - self.x_min) * (self.x_high - self.x_low) + self.x_low
    }

    pub fn invert(&self, y: f64) -> f64 {
        if y == self.x_low {
            return self.x_min;
        }
        if y == self.x_high {
            return self.x_max;
        }
        (y - self.x_low) / (self.x_high - self.x_low) * (self.x_max - self.x_min) + self.x_min
    }
}

/// Min-max scales `series` onto `[target_low, target_high]`.
pub fn normalize(series: &TimeSeries, target_low: f64, target_high: f64) -> Result<(TimeSeries, NormalizationParams)> {
    let params = NormalizationParams::fit(series.values(), target_low, target_high)?;
    let scaled = series.values().iter().map(|&x| params.apply(x)).collect();
    Ok((series.with_values(scaled)?, params))
}

pub fn denormalize(series: &TimeSeries, params: &NormalizationParams) -> Result<TimeSeries> {
    series.with_values(series.values().iter().map(|&y| params.invert(y)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastEvaluation {
    pub observed: Vec<f64>,
    pub predicted: Vec<f64>,
    pub n: usize,
    /// Percent.
    pub mape: f64,
    pub rmse: f64,
    /// Plain ratio (no percent scaling).
    pub rmsre: f64,
}

/// MAPE (%), RMSE and RMSRE of `predicted` against `observed`.
pub fn evaluate(observed: &[f64], predicted: &[f64]) -> Result<ForecastEvaluation> {
    if observed.len() != predicted.len() {
        return Err(SeriesError::LengthMismatch { left: observed.len(), right: predicted.len() });
    }
    if observed.is_empty() {
        return Err(SeriesError::TooShort { need: 1, got: 0 });
    }
    if let Some(i) = observed.iter().chain(predicted).position(|v| !v.is_finite()) {
        return Err(SeriesError::NonFinite(i % observed.len()));
    }
    if let Some(i) = observed.iter().position(|&y| y == 0.0) {
        return Err(SeriesError::ZeroObserved(i));
    }
    let n = observed.len() as f64;
    let mut abs_pct = 0.0;
    let mut sq = 0.0;
    let mut sq_rel = 0.0;
    for (&y, &p) in observed.iter().zip(predicted) {
        let e = y - p;
        abs_pct += (e / y).abs();
        sq += e * e;
        sq_rel += (e / y) * (e / y);
    }
    Ok(ForecastEvaluation {
        observed: observed.to_vec(),
        predicted: predicted.to_vec(),
        n: observed.len(),
        mape: abs_pct / n * 100.0,
        rmse: (sq / n).sqrt(),
        rmsre: (sq_rel / n).sqrt(),
    })
}

/// Relative improvement of `metric_a` over baseline `metric_b`, in percent.
pub fn improvement_pct(metric_b: f64, metric_a: f64) -> Result<f64> {
    if !(metric_b > 0.0) {
        return Err(SeriesError::NonPositiveBaseline(metric_b));
    }
    Ok((metric_b - metric_a) / metric_b * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_length: usize,
}

impl SplitSpec {
    /// Trailing 20% (rounded up) held out.
    pub fn default_for(len: usize) -> Self {
        Self { test_length: (len as f64 * 0.2).ceil() as usize }
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        if self.test_length == 0 || self.test_length + 2 > len {
            return Err(SeriesError::InvalidSplit { test_length: self.test_length, len });
        }
        Ok(())
    }
}

/// Contiguous (train, test) partition; the test segment is the trailing
/// `test_length` points. The test segment may be a single point.
pub fn split(series: &TimeSeries, spec: SplitSpec) -> Result<(TimeSeries, TimeSeries)> {
    spec.validate(series.len())?;
    let cut = series.len() - spec.test_length;
    let train = TimeSeries::segment(series.name.clone(), series.start, series.values[..cut].to_vec())?;
    let test = TimeSeries::segment(series.name.clone(), series.period(cut), series.values[cut..].to_vec())?;
    Ok((train, test))
}

#[derive(Debug, Deserialize, Serialize)]
struct SeriesRow {
    period: String,
    value: f64,
}

/// Parses a `period,value` CSV. Periods must be strictly consecutive.
pub fn read_series_csv<R: Read>(reader: R, name: &str) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["period", "value"] {
        return Err(SeriesError::Parse { line: 1, msg: format!("expected header `period,value`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")) });
    }
    let mut start: Option<Period> = None;
    let mut prev: Option<Period> = None;
    let mut values = Vec::new();
    for (i, row) in rdr.deserialize::<SeriesRow>().enumerate() {
        let line = i + 2;
        let row = row?;
        let period: Period = row.period.parse().map_err(|e: SeriesError| SeriesError::Parse { line, msg: e.to_string() })?;
        if let Some(p) = prev {
            if period.frequency() != p.frequency() {
                return Err(SeriesError::Parse { line, msg: "mixed period frequencies".into() });
            }
            if period.index() <= p.index() {
                return Err(SeriesError::Parse { line, msg: format!("period {period} duplicates or precedes {p}") });
            }
            if period.index() != p.index() + 1 {
                return Err(SeriesError::Parse { line, msg: format!("gap between {p} and {period}") });
            }
        }
        if !row.value.is_finite() {
            return Err(SeriesError::Parse { line, msg: "non-finite value".into() });
        }
        start.get_or_insert(period);
        prev = Some(period);
        values.push(row.value);
    }
    let start = start.ok_or(SeriesError::TooShort { need: 2, got: 0 })?;
    TimeSeries::new(name, start, values)
}

pub fn write_series_csv<W: Write>(writer: W, series: &TimeSeries) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (p, &v) in series.periods().zip(series.values()) {
        wtr.serialize(SeriesRow { period: p.to_string(), value: v })?;
    }
    wtr.flush()?;
    Ok(())
}
