use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::gp::GpSurrogate;
use super::qmc::shifted_halton;
use super::space::{Point, SearchSpace};
use super::{HyperoptError, Result};

/// Below this expected improvement (standardized units) the margin `xi` is
/// treated as unreachable everywhere and the search is repeated with no
/// margin, so an essentially converged surrogate exploits its minimum
/// instead of returning an arbitrary candidate.
pub const EXHAUSTED_EI: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionConfig {
    /// Improvement margin, in standardized-loss units.
    pub xi: f64,
    /// Escalate when the winner's sd falls below this multiple of the noise sd.
    pub exploit_threshold: f64,
    pub escalation_factor: f64,
    pub max_escalations: usize,
    pub candidate_pool: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self { xi: 0.01, exploit_threshold: 0.5, escalation_factor: 2.0, max_escalations: 5, candidate_pool: 2000 }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HyperoptError::InvalidConfig(m.into()));
        if !(self.xi >= 0.0) {
            return bad("xi must be >= 0");
        }
        if !(self.exploit_threshold >= 0.0) {
            return bad("exploit_threshold must be >= 0");
        }
        if !(self.escalation_factor > 1.0) {
            return bad("escalation_factor must exceed 1");
        }
        if self.candidate_pool == 0 {
            return bad("candidate_pool must be positive");
        }
        Ok(())
    }
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Closed-form expected improvement for minimization with margin `xi`.
pub fn expected_improvement(mean: f64, sd: f64, incumbent: f64, xi: f64) -> f64 {
    let g = incumbent - mean - xi;
    if sd <= 0.0 {
        return g.max(0.0);
    }
    let u = g / sd;
    (g * norm_cdf(u) + sd * norm_pdf(u)).max(0.0)
}

/// Natural log of [`expected_improvement`], accurate where the improvement
/// itself underflows. Used to rank candidates so that a flat, all-zero
/// acquisition surface still has a well-defined maximizer.
pub fn log_expected_improvement(mean: f64, sd: f64, incumbent: f64, xi: f64) -> f64 {
    let g = incumbent - mean - xi;
    if sd <= 0.0 {
        return if g > 0.0 { g.ln() } else { f64::NEG_INFINITY };
    }
    let u = g / sd;
    if u > -5.0 {
        return expected_improvement(mean, sd, incumbent, xi).ln();
    }
    // With x = -u: phi(u) + u*Phi(u) = phi(x) * (1 - x*R(x)), R the Mills
    // ratio, evaluated by its continued fraction x + 1/(x + 2/(x + ...)).
    let x = -u;
    let mut t = x;
    for k in (1..=200).rev() {
        t = x + k as f64 / t;
    }
    let tail = 1.0 - x / t;
    sd.ln() - 0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln() + tail.ln()
}

fn standardized(surrogate: &GpSurrogate, z: &[f64], incumbent_loss: f64) -> (f64, f64, f64) {
    let (m, s) = surrogate.posterior_standardized(z);
    (m, s, (incumbent_loss - surrogate.y_mean) / surrogate.y_scale)
}

/// Expected improvement at `z`, computed on the surrogate's standardized
/// scale.
pub fn expected_improvement_plus(surrogate: &GpSurrogate, z: &[f64], incumbent_loss: f64, config: &AcquisitionConfig) -> f64 {
    let (m, s, inc) = standardized(surrogate, z, incumbent_loss);
    expected_improvement(m, s, inc, config.xi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub point: Point,
    /// Encoding of `point` (snapped to the valid grid).
    pub z: Vec<f64>,
    pub ei: f64,
    /// Posterior sd at the proposal, standardized units.
    pub sd: f64,
    /// Number of output-scale escalations applied.
    pub escalations: usize,
    /// True when the margin was dropped because no candidate could beat
    /// the incumbent by `xi`.
    pub margin_relaxed: bool,
}

fn maximize(surrogate: &GpSurrogate, space: &SearchSpace, candidates: &[Vec<f64>], incumbent: f64, config: &AcquisitionConfig) -> (Vec<f64>, f64) {
    let score = |z: &[f64]| {
        let (m, s, inc) = standardized(surrogate, z, incumbent);
        log_expected_improvement(m, s, inc, config.xi)
    };
    // Candidates are scored in a fixed order; ties keep the earliest.
    let mut best = space.snap(&candidates[0]);
    let mut best_ei = score(&best);
    let mut raw = candidates[0].clone();
    for c in &candidates[1..] {
        let z = space.snap(c);
        let e = score(&z);
        if e > best_ei {
            best = z;
            best_ei = e;
            raw = c.clone();
        }
    }
    // Local coordinate refinement around the winning raw candidate.
    let mut step = 0.05;
    while step >= 1e-3 {
        let mut improved = false;
        for k in 0..raw.len() {
            for dir in [1.0, -1.0] {
                let mut t = raw.clone();
                t[k] = (t[k] + dir * step).clamp(0.0, 1.0);
                let z = space.snap(&t);
                let e = score(&z);
                if e > best_ei {
                    raw = t;
                    best = z;
                    best_ei = e;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_ei.exp())
}

/// Maximizes expected improvement over a seeded quasi-random candidate pool
/// with local refinement. When the winner's posterior sd is below
/// `exploit_threshold` times the noise sd, the kernel output scale is
/// multiplied by `escalation_factor` and the search repeated, at most
/// `max_escalations` times.
pub fn propose_next(surrogate: &GpSurrogate, space: &SearchSpace, config: &AcquisitionConfig, seed: u64) -> Result<Proposal> {
    config.validate()?;
    if surrogate.owner.len() != space.encoded_len() {
        return Err(HyperoptError::InvalidConfig("surrogate and search space dimensions differ".into()));
    }
    let candidates = shifted_halton(config.candidate_pool, space.encoded_len(), seed);
    let incumbent = surrogate.incumbent();
    let mut current = surrogate.clone();
    let relaxed = AcquisitionConfig { xi: 0.0, ..config.clone() };
    let mut escalations = 0;
    loop {
        let (mut z, mut ei) = maximize(&current, space, &candidates, incumbent, config);
        let margin_relaxed = ei < EXHAUSTED_EI && config.xi > 0.0;
        if margin_relaxed {
            (z, ei) = maximize(&current, space, &candidates, incumbent, &relaxed);
        }
        let sd = current.posterior_standardized(&z).1;
        let floor = config.exploit_threshold * current.hyper.noise.sqrt();
        if sd >= floor || escalations == config.max_escalations {
            return Ok(Proposal { point: space.decode(&z), z, ei, sd, escalations, margin_relaxed });
        }
        let mut hyper = current.hyper.clone();
        hyper.output_scale *= config.escalation_factor;
        log::debug!("over-exploitation (sd {sd:.3e} < {floor:.3e}); output scale -> {}", hyper.output_scale);
        current = current.refit(hyper)?;
        escalations += 1;
    }
}
