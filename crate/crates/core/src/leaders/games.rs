use std::fmt;

use serde::{Deserialize, Serialize};

use super::centrality::CentralityVector;
use super::{LeaderError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Original,
    Altered,
    Agreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Solution {
    S1,
    S2,
    S3,
    S4,
}

impl Solution {
    pub const ALL: [Solution; 4] = [Solution::S1, Solution::S2, Solution::S3, Solution::S4];

    pub fn actions(self) -> &'static [Action] {
        match self {
            Solution::S1 => &[Action::Original, Action::Altered],
            _ => &[Action::Original, Action::Altered, Action::Agreement],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Solution::S1 => "S1",
            Solution::S2 => "S2",
            Solution::S3 => "S3",
            Solution::S4 => "S4",
        }
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Payoff parameters of the bilateral opinion game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameParams {
    /// Payoff for persuading the other side to change plan.
    pub x_pay: f64,
    /// Payoff for keeping one's own plan.
    pub y_pay: f64,
    /// Payoff for reaching agreement.
    pub i_pay: f64,
    /// Distance between the players; required by S3 and S4.
    pub d: Option<f64>,
    pub u_a: f64,
    pub u_b: f64,
    pub lambda: f64,
    pub rho: f64,
    pub mu: f64,
    pub eta: f64,
}

impl Default for GameParams {
    fn default() -> Self {
        Self { x_pay: 1.0, y_pay: 1.0, i_pay: 0.5, d: None, u_a: 0.5, u_b: 0.5, lambda: 0.25, rho: 0.25, mu: 0.3, eta: 0.1 }
    }
}

impl GameParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LeaderError::InvalidParams(m));
        for (name, v) in [("x_pay", self.x_pay), ("y_pay", self.y_pay), ("i_pay", self.i_pay)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if let Some(d) = self.d {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("distance d = {d} must be positive"));
            }
        }
        for (name, v) in [("u_a", self.u_a), ("u_b", self.u_b)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} = {v} outside (0, 1)"));
            }
        }
        for (name, v) in [("lambda", self.lambda), ("rho", self.rho)] {
            if !(0.0..=0.5).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 0.5]"));
            }
        }
        for (name, v) in [("mu", self.mu), ("eta", self.eta)] {
            if !(v > 0.0 && v < 0.5) {
                return bad(format!("{name} = {v} outside (0, 0.5)"));
            }
        }
        Ok(())
    }
}

/// Row player A, column player B; `m_a[r][c]` is A's payoff when A plays
/// action `r` and B plays action `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrices {
    pub solution: Solution,
    pub actions: Vec<Action>,
    pub m_a: Vec<Vec<f64>>,
    pub m_b: Vec<Vec<f64>>,
}

impl PayoffMatrices {
    /// Row indices that maximise A's payoff against B's action `col`.
    pub fn best_responses_a(&self, col: usize) -> Vec<usize> {
        argmax_set((0..self.actions.len()).map(|r| self.m_a[r][col]))
    }

    /// Column indices that maximise B's payoff against A's action `row`.
    pub fn best_responses_b(&self, row: usize) -> Vec<usize> {
        argmax_set((0..self.actions.len()).map(|c| self.m_b[row][c]))
    }

    fn agreement_index(&self) -> Option<usize> {
        self.actions.iter().position(|&a| a == Action::Agreement)
    }

    /// Whether agreement is a best response for (A, B) against at least one
    /// action of the opponent.
    pub fn agreement_is_best_response(&self) -> (bool, bool) {
        let Some(g) = self.agreement_index() else {
            return (false, false);
        };
        let k = self.actions.len();
        let a = (0..k).any(|c| self.best_responses_a(c).contains(&g));
        let b = (0..k).any(|r| self.best_responses_b(r).contains(&g));
        (a, b)
    }
}

fn argmax_set(values: impl Iterator<Item = f64>) -> Vec<usize> {
    let v: Vec<f64> = values.collect();
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * best.abs().max(1.0);
    v.iter().enumerate().filter(|(_, &x)| x >= best - tol).map(|(i, _)| i).collect()
}

/// Payoff matrices of the chosen solution, entry for entry as printed.
pub fn payoff_matrices(solution: Solution, p: &GameParams) -> Result<PayoffMatrices> {
    p.validate()?;
    let (x, y, i) = (p.x_pay, p.y_pay, p.i_pay);
    let (m_a, m_b) = match solution {
        Solution::S1 => (vec![vec![0.0, x + y], vec![-x - y, 0.0]], vec![vec![0.0, -x - y], vec![x + y, 0.0]]),
        Solution::S2 => (
            vec![vec![0.0, x + y, i + y], vec![-x - y, 0.0, i - x], vec![-i - y, -i + x, 0.0]],
            vec![vec![0.0, -x - y, -i - y], vec![x + y, 0.0, -i + x], vec![i + y, i - x, 0.0]],
        ),
        Solution::S3 => {
            let inv = 1.0 / p.d.ok_or(LeaderError::MissingDistance("S3"))?;
            (
                vec![vec![0.0, x + y, i + y + inv], vec![-x - y, 0.0, i - x + inv], vec![-i - y + inv, -i + x + inv, 2.0 * inv]],
                vec![vec![0.0, -x - y, -i - y + inv], vec![x + y, 0.0, -i + x + inv], vec![i + y + inv, i - x + inv, 2.0 * inv]],
            )
        }
        Solution::S4 => {
            let inv = 1.0 / p.d.ok_or(LeaderError::MissingDistance("S4"))?;
            let (ua, ub) = (p.u_a, p.u_b);
            let oo = y * ((1.0 - ub) - (1.0 - ua));
            let aa = x * (ua - ub);
            let oa = y * (1.0 - ub) + x * ua;
            let ao = -x * ub - y * (1.0 - ua);
            let og = y * (1.0 - ub) + i + inv;
            let ag = -x * ub + i + inv;
            let go = -y * (1.0 - ua) - i + inv;
            let ga = x * ua - i + inv;
            let gg = 2.0 * inv;
            (vec![vec![oo, oa, og], vec![ao, aa, ag], vec![go, ga, gg]], vec![vec![oo, ao, go], vec![oa, aa, ga], vec![og, ag, gg]])
        }
    };
    Ok(PayoffMatrices { solution, actions: solution.actions().to_vec(), m_a, m_b })
}

/// One round of opinion exchange. A moves toward B at rate `mu`; B's update
/// uses `(e_b - e_a)` with rate `eta`, so the gap scales by `1 + eta - mu`
/// each round and only shrinks when `eta < mu`.
pub fn opinion_step(e_a: f64, e_b: f64, mu: f64, eta: f64) -> (f64, f64) {
    let gap = e_b - e_a;
    (e_a + mu * gap, e_b + eta * gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Radical terms of the two endpoints only.
    #[default]
    Pairwise,
    /// Radical term summed over every node except `j`.
    Literal,
}

fn radical(c: &CentralityVector, i: usize) -> f64 {
    let dc = c.degree[i];
    if dc <= 0.0 {
        log::debug!("node {i} has zero degree; radical term skipped");
        return 0.0;
    }
    (c.betweenness[i] * c.closeness[i] / dc).sqrt()
}

/// Centrality-based distance between nodes `i` and `j`.
pub fn pair_distance(i: usize, j: usize, c: &CentralityVector, lambda: f64, rho: f64, mode: DistanceMode) -> f64 {
    let core = match mode {
        DistanceMode::Pairwise => radical(c, i) + radical(c, j),
        DistanceMode::Literal => (0..c.len()).filter(|&k| k != j).map(|k| radical(c, k)).sum(),
    };
    core + lambda * c.clustering[i] + rho * c.clustering[j]
}
