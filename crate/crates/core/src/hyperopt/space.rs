use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{HyperoptError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DimKind {
    IntegerLinear { lo: i64, hi: i64 },
    RealLog { lo: f64, hi: f64 },
    RealLinear { lo: f64, hi: f64 },
    Categorical { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    #[serde(flatten)]
    pub kind: DimKind,
}

impl Dimension {
    pub fn integer(name: &str, lo: i64, hi: i64) -> Self {
        Self { name: name.into(), kind: DimKind::IntegerLinear { lo, hi } }
    }

    pub fn real_log(name: &str, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), kind: DimKind::RealLog { lo, hi } }
    }

    pub fn real(name: &str, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), kind: DimKind::RealLinear { lo, hi } }
    }

    pub fn categorical(name: &str, choices: &[&str]) -> Self {
        Self { name: name.into(), kind: DimKind::Categorical { choices: choices.iter().map(|c| c.to_string()).collect() } }
    }

    /// Number of unit-cube coordinates this dimension occupies.
    pub fn width(&self) -> usize {
        match &self.kind {
            DimKind::Categorical { choices } => choices.len(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Real(r) => Some(*r),
            ParamValue::Cat(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Cat(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(r) => write!(f, "{r}"),
            ParamValue::Cat(s) => f.write_str(s),
        }
    }
}

/// Named hyperparameter values.
pub type Point = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dimensions: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self> {
        let s = Self { dimensions };
        s.validate()?;
        Ok(s)
    }

    /// The six-dimensional network search box: units, layers, learning
    /// rate, L2 penalty, dropout and recurrent mode.
    pub fn table1() -> Self {
        Self {
            dimensions: vec![
                Dimension::integer("units", 60, 250),
                Dimension::integer("layers", 1, 8),
                Dimension::real_log("learning_rate", 1e-2, 1.0),
                Dimension::real_log("l2_penalty", 1e-10, 1e-2),
                Dimension::real("dropout_rate", 0.1, 0.9),
                Dimension::categorical("mode", &["bilstm", "lstm"]),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HyperoptError::InvalidSpace(m));
        if self.dimensions.is_empty() {
            return bad("search space has no dimensions".into());
        }
        let mut seen = std::collections::HashSet::new();
        for d in &self.dimensions {
            if !seen.insert(&d.name) {
                return bad(format!("duplicate dimension {}", d.name));
            }
            let ok = match &d.kind {
                DimKind::IntegerLinear { lo, hi } => lo < hi,
                DimKind::RealLinear { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
                DimKind::RealLog { lo, hi } => *lo > 0.0 && hi.is_finite() && lo < hi,
                DimKind::Categorical { choices } => !choices.is_empty(),
            };
            if !ok {
                return bad(format!("dimension {} has invalid bounds", d.name));
            }
        }
        Ok(())
    }

    pub fn dim(&self, name: &str) -> Option<&Dimension> {
        self.dimensions.iter().find(|d| d.name == name)
    }

    /// Replace the bounds of an existing dimension.
    pub fn set_dimension(&mut self, dim: Dimension) -> Result<()> {
        let slot = self.dimensions.iter_mut().find(|d| d.name == dim.name).ok_or_else(|| HyperoptError::InvalidSpace(format!("unknown dimension {}", dim.name)))?;
        *slot = dim;
        self.validate()
    }

    pub fn encoded_len(&self) -> usize {
        self.dimensions.iter().map(Dimension::width).sum()
    }

    /// For each unit-cube coordinate, the index of the dimension it encodes.
    pub fn coordinate_owner(&self) -> Vec<usize> {
        self.dimensions.iter().enumerate().flat_map(|(i, d)| std::iter::repeat_n(i, d.width())).collect()
    }

    pub fn encode(&self, point: &Point) -> Result<Vec<f64>> {
        let mut z = Vec::with_capacity(self.encoded_len());
        for d in &self.dimensions {
            let v = point.get(&d.name).ok_or_else(|| HyperoptError::OutOfBounds { name: d.name.clone(), value: "missing".into() })?;
            let oob = || HyperoptError::OutOfBounds { name: d.name.clone(), value: v.to_string() };
            match (&d.kind, v) {
                (DimKind::IntegerLinear { lo, hi }, ParamValue::Int(i)) if (lo..=hi).contains(&i) => {
                    z.push((i - lo) as f64 / (hi - lo) as f64);
                }
                (DimKind::RealLinear { lo, hi }, ParamValue::Real(r)) if (*lo..=*hi).contains(r) => z.push((r - lo) / (hi - lo)),
                (DimKind::RealLog { lo, hi }, ParamValue::Real(r)) if (*lo..=*hi).contains(r) => {
                    z.push(((r.ln() - lo.ln()) / (hi.ln() - lo.ln())).clamp(0.0, 1.0));
                }
                (DimKind::Categorical { choices }, ParamValue::Cat(c)) => {
                    let k = choices.iter().position(|x| x == c).ok_or_else(oob)?;
                    z.extend((0..choices.len()).map(|j| if j == k { 1.0 } else { 0.0 }));
                }
                _ => return Err(oob()),
            }
        }
        Ok(z)
    }

    /// Maps a unit-cube vector to a valid point: coordinates are clamped,
    /// integers rounded, categorical blocks resolved by argmax.
    pub fn decode(&self, z: &[f64]) -> Point {
        assert_eq!(z.len(), self.encoded_len(), "encoded vector has wrong length");
        let mut p = Point::new();
        let mut k = 0;
        for d in &self.dimensions {
            let u = z[k].clamp(0.0, 1.0);
            let v = match &d.kind {
                DimKind::IntegerLinear { lo, hi } => ParamValue::Int((lo + ((hi - lo) as f64 * u).round() as i64).clamp(*lo, *hi)),
                DimKind::RealLinear { lo, hi } => ParamValue::Real((lo + (hi - lo) * u).clamp(*lo, *hi)),
                DimKind::RealLog { lo, hi } => ParamValue::Real((lo.ln() + (hi.ln() - lo.ln()) * u).exp().clamp(*lo, *hi)),
                DimKind::Categorical { choices } => {
                    let block = &z[k..k + choices.len()];
                    let best = (0..block.len()).fold(0, |b, j| if block[j] > block[b] { j } else { b });
                    ParamValue::Cat(choices[best].clone())
                }
            };
            p.insert(d.name.clone(), v);
            k += d.width();
        }
        p
    }

    /// Decode then re-encode, snapping to the representable grid.
    pub fn snap(&self, z: &[f64]) -> Vec<f64> {
        self.encode(&self.decode(z)).expect("decoded points are in bounds")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(units: i64, lr: f64) -> Point {
        let mut p = Point::new();
        p.insert("units".into(), ParamValue::Int(units));
        p.insert("layers".into(), ParamValue::Int(2));
        p.insert("learning_rate".into(), ParamValue::Real(lr));
        p.insert("l2_penalty".into(), ParamValue::Real(1e-6));
        p.insert("dropout_rate".into(), ParamValue::Real(0.1));
        p.insert("mode".into(), ParamValue::Cat("lstm".into()));
        p
    }

    #[test]
    fn encode_endpoints_and_log_midpoint() {
        let s = SearchSpace::table1();
        assert_eq!(s.encoded_len(), 7);
        let z = s.encode(&point(60, 0.1)).unwrap();
        assert_eq!(z[0], 0.0);
        assert!((z[2] - 0.5).abs() < 1e-15);
        assert_eq!(&z[5..], &[0.0, 1.0]);
        assert_eq!(s.encode(&point(250, 1.0)).unwrap()[0], 1.0);
    }

    #[test]
    fn out_of_bounds_rejected() {
        let s = SearchSpace::table1();
        assert!(matches!(s.encode(&point(59, 0.1)), Err(HyperoptError::OutOfBounds { .. })));
        assert!(matches!(s.encode(&point(60, 2.0)), Err(HyperoptError::OutOfBounds { .. })));
        let mut p = point(60, 0.1);
        p.insert("mode".into(), ParamValue::Cat("gru".into()));
        assert!(s.encode(&p).is_err());
    }

    #[test]
    fn invalid_spaces() {
        assert!(SearchSpace::new(vec![Dimension::real_log("x", 0.0, 1.0)]).is_err());
        assert!(SearchSpace::new(vec![Dimension::integer("x", 3, 3)]).is_err());
        assert!(SearchSpace::new(vec![Dimension::categorical("x", &[])]).is_err());
        assert!(SearchSpace::new(vec![Dimension::real("x", 0.0, 1.0), Dimension::real("x", 0.0, 1.0)]).is_err());
    }
}
