use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::acquisition::{propose_next, AcquisitionConfig};
use super::gp::gp_fit;
use super::qmc::shifted_halton;
use super::space::{Point, SearchSpace};
use super::{HyperoptError, Result};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoRecord {
    /// 1-based evaluation index.
    pub iteration: usize,
    pub point: Point,
    pub z: Vec<f64>,
    pub loss: f64,
    /// Best loss up to and including this iteration.
    pub incumbent: f64,
    /// True when the point came from the acquisition rather than the
    /// initial design.
    pub proposed: bool,
    pub failed: bool,
    pub escalations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoHistory {
    pub records: Vec<BoRecord>,
    pub best_point: Point,
    pub best_loss: f64,
    pub best_iteration: usize,
    pub budget: usize,
    pub init_design_size: usize,
    pub seed: u64,
}

impl BoHistory {
    pub fn incumbent_trace(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.incumbent).collect()
    }

    /// CSV with columns `iteration,point,loss,incumbent`; `point` is the
    /// compact JSON object of hyperparameter values.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| HyperoptError::Io(e.to_string());
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(["iteration", "point", "loss", "incumbent"]).map_err(io)?;
        for r in &self.records {
            let p = serde_json::to_string(&r.point).map_err(|e| HyperoptError::Io(e.to_string()))?;
            w.write_record([r.iteration.to_string(), p, r.loss.to_string(), r.incumbent.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| HyperoptError::Io(e.to_string()))
    }
}

/// Five points, or a quarter of the budget when that is larger.
pub fn default_init_design(budget: usize) -> usize {
    (budget / 4).max(5).min(budget)
}

struct Recorder {
    records: Vec<BoRecord>,
}

impl Recorder {
    fn worst(&self) -> Option<f64> {
        self.records.iter().filter(|r| !r.failed).map(|r| r.loss).reduce(f64::max)
    }

    fn penalty(worst: f64) -> f64 {
        if worst >= 0.0 { 10.0 * worst } else { worst - 9.0 * worst }
    }

    fn push(&mut self, point: Point, z: Vec<f64>, outcome: std::result::Result<f64, String>, proposed: bool, escalations: usize) {
        let (loss, failed) = match outcome {
            Ok(l) if l.is_finite() => (l, false),
            Ok(l) => {
                log::warn!("objective returned {l}; recording as failed");
                (f64::INFINITY, true)
            }
            Err(e) => {
                log::warn!("objective failed: {e}");
                (f64::INFINITY, true)
            }
        };
        let iteration = self.records.len() + 1;
        self.records.push(BoRecord { iteration, point, z, loss, incumbent: f64::INFINITY, proposed, failed, escalations });
        // Failed evaluations score ten times the worst finite loss; entries
        // recorded before any finite loss existed are filled in once one does.
        if let Some(w) = self.worst() {
            let p = Self::penalty(w);
            for r in self.records.iter_mut().filter(|r| r.failed && r.loss.is_infinite()) {
                r.loss = p;
            }
        }
        let mut inc = f64::INFINITY;
        for r in &mut self.records {
            inc = inc.min(r.loss);
            r.incumbent = inc;
        }
    }

    fn finish(self, budget: usize, init_design_size: usize, seed: u64) -> BoHistory {
        let best = self
            .records
            .iter()
            .filter(|r| !r.failed)
            .min_by(|a, b| a.loss.total_cmp(&b.loss))
            .or_else(|| self.records.first())
            .expect("budget is positive");
        BoHistory {
            best_point: best.point.clone(),
            best_loss: best.loss,
            best_iteration: best.iteration,
            records: self.records,
            budget,
            init_design_size,
            seed,
        }
    }
}

/// Bayesian optimization: a seeded quasi-random initial design, then
/// fit, propose, evaluate until `budget` evaluations have been made.
/// Objective failures do not abort the run.
pub fn run_bo<F>(mut objective: F, space: &SearchSpace, budget: usize, init_design_size: usize, seed: u64, config: &AcquisitionConfig) -> Result<BoHistory>
where
    F: FnMut(&Point) -> std::result::Result<f64, String>,
{
    space.validate()?;
    config.validate()?;
    if init_design_size < 2 || budget < init_design_size {
        return Err(HyperoptError::InvalidConfig(format!("need budget >= init design >= 2, got {budget} and {init_design_size}")));
    }
    let owner = space.coordinate_owner();
    let mut rec = Recorder { records: Vec::with_capacity(budget) };
    for raw in shifted_halton(init_design_size, space.encoded_len(), seeds::derive(seed, "bo/init")) {
        let z = space.snap(&raw);
        let point = space.decode(&z);
        let out = objective(&point);
        rec.push(point, z, out, false, 0);
    }
    for it in init_design_size..budget {
        let obs: Vec<_> = rec.records.iter().filter(|r| r.loss.is_finite()).collect();
        let xs: Vec<Vec<f64>> = obs.iter().map(|r| r.z.clone()).collect();
        let ys: Vec<f64> = obs.iter().map(|r| r.loss).collect();
        let prop = if xs.is_empty() {
            // Nothing finite to model yet: keep sampling the design sequence.
            let raw = shifted_halton(it + 1, space.encoded_len(), seeds::derive(seed, "bo/init")).pop().unwrap();
            let z = space.snap(&raw);
            super::acquisition::Proposal { point: space.decode(&z), z, ei: 0.0, sd: 0.0, escalations: 0, margin_relaxed: false }
        } else {
            let gp = gp_fit(&xs, &ys, &owner, seeds::derive_indexed(seed, "bo/fit", it as u64))?;
            propose_next(&gp, space, config, seeds::derive_indexed(seed, "bo/propose", it as u64))?
        };
        let out = objective(&prop.point);
        rec.push(prop.point, prop.z, out, true, prop.escalations);
    }
    Ok(rec.finish(budget, init_design_size, seed))
}

/// Independent uniform sampling of the box, the baseline for BO.
pub fn random_search<F>(mut objective: F, space: &SearchSpace, budget: usize, seed: u64) -> Result<BoHistory>
where
    F: FnMut(&Point) -> std::result::Result<f64, String>,
{
    space.validate()?;
    if budget == 0 {
        return Err(HyperoptError::InvalidConfig("budget must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, "random-search"));
    let mut rec = Recorder { records: Vec::with_capacity(budget) };
    for _ in 0..budget {
        let raw: Vec<f64> = (0..space.encoded_len()).map(|_| rng.random::<f64>()).collect();
        let z = space.snap(&raw);
        let point = space.decode(&z);
        let out = objective(&point);
        rec.push(point, z, out, false, 0);
    }
    Ok(rec.finish(budget, budget, seed))
}
