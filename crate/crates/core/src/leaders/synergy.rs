use serde::{Deserialize, Serialize};

use super::centrality::CentralityVector;
use super::shapley::ShapleyResult;
use super::{LeaderError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynergyParams {
    pub delta: f64,
    pub partial: f64,
    pub c: f64,
}

impl Default for SynergyParams {
    fn default() -> Self {
        Self { delta: 1.0, partial: 1.0, c: 1.0 }
    }
}

impl SynergyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("partial", self.partial), ("c", self.c)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LeaderError::InvalidParams(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Pair synergy: mean eigenvector centrality times `partial` times the
/// mean Shapley value.
pub fn pair_synergy(i: usize, j: usize, c: &CentralityVector, sp: &ShapleyResult, p: &SynergyParams) -> f64 {
    0.5 * (c.eigenvector[i] + c.eigenvector[j]) * 0.5 * p.partial * (sp.sp[i] + sp.sp[j])
}

/// Coalition synergy: `delta * (omega_ij / x)^c` summed over unordered
/// member pairs, with `x` the coalition size.
pub fn coalition_synergy(members: &[usize], c: &CentralityVector, sp: &ShapleyResult, p: &SynergyParams) -> Result<f64> {
    if members.len() < 2 {
        return Err(LeaderError::TooSmall(members.len()));
    }
    let x = members.len() as f64;
    let mut phi = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            let ratio = pair_synergy(i, j, c, sp, p) / x;
            // Negative Shapley estimates can leak out of Monte Carlo; keep
            // the power real.
            phi += p.delta * ratio.max(0.0).powf(p.c);
        }
    }
    Ok(phi)
}
