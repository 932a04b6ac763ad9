//! Value iteration with rewards estimated from data.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, MdpModel};
use crate::error::{invalid, Error, Result};
use crate::query::{Component, Query};

/// Known dynamics plus a discount factor; rewards come from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpSpec {
    pub model: MdpModel,
    pub gamma: f64,
}

impl MdpSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!("discount must lie in (0,1), got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.model.states
    }

    pub fn actions(&self) -> usize {
        self.model.actions
    }
}

/// `h'_i = max_a ( r(i,a) + γ Σ_j P(i,a,j) h_j )`, with `rewards[i * m + a]`.
pub fn bellman_step(h: &[f64], rewards: &[f64], mdp: &MdpSpec) -> Result<Vec<f64>> {
    let (d, m) = (mdp.states(), mdp.actions());
    if m == 0 {
        return Err(invalid("empty action set"));
    }
    if h.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: h.len() });
    }
    if rewards.len() != d * m {
        return Err(Error::DimensionMismatch { expected: d * m, actual: rewards.len() });
    }
    Ok((0..d)
        .map(|i| {
            (0..m)
                .map(|a| {
                    let future: f64 = (0..d).map(|j| mdp.model.transition(i, a, j) * h[j]).sum();
                    rewards[i * m + a] + mdp.gamma * future
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Mean reward over tuples with `s1 = i, a = action`; 0 when no tuple matches.
pub fn reward_estimate(s: &Dataset, i: usize, action: usize) -> f64 {
    let (s1, a, r) = (s.column(0), s.column(1), s.column(2));
    let (mut num, mut den) = (0.0, 0usize);
    for k in 0..s.n() {
        if s1[k] == i as f64 && a[k] == action as f64 {
            num += r[k];
            den += 1;
        }
    }
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

/// The value-iteration analyst's (state-independent) query: for each cell
/// `(i, a)`, the reward mass and the visit frequency.
pub fn cell_query(mdp: &MdpSpec) -> Query {
    let mut comps = Vec::with_capacity(2 * mdp.states() * mdp.actions());
    for i in 0..mdp.states() {
        for a in 0..mdp.actions() {
            comps.push(Component::RewardCell { state: i, action: a });
            comps.push(Component::VisitCell { state: i, action: a });
        }
    }
    Query::new(comps)
}

/// Reward estimates `num/den` per cell from an answer to [`cell_query`];
/// cells with a nonpositive visit frequency get 0, and ratios are clamped
/// to [0,1] since noisy answers need not be consistent.
pub fn rewards_from_answer(a: &[f64]) -> Vec<f64> {
    a.chunks_exact(2).map(|p| if p[1] > 0.0 { (p[0] / p[1]).clamp(0.0, 1.0) } else { 0.0 }).collect()
}
