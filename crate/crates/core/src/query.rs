//! Vector-valued statistical queries `q: D -> [0,1]^{d_q}` built from a closed
//! set of component families, so that every query has a stable identifier
//! and, for most distributions, an exact population mean.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Dataset, Distribution};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Component {
    /// `clamp(value)` regardless of the point.
    Constant { value: f64 },
    /// `clamp(offset + slope * x[coord])`.
    ClampedAffine { coord: usize, offset: f64, slope: f64 },
    /// `1{x[coord] <= theta}`.
    Threshold { coord: usize, theta: f64 },
    /// `r * 1{s1 = state, a = action}` on MDP tuples `(s1, a, r, s2)`.
    RewardCell { state: usize, action: usize },
    /// `1{s1 = state, a = action}` on MDP tuples.
    VisitCell { state: usize, action: usize },
    /// `1{sum_i signs[i] * (x[i] - 1/2) >= 0}`.
    SignVote { signs: Vec<i8> },
    /// Positive or negative part of one coordinate of the logistic-loss
    /// gradient at `weights`, divided by `bound` and clamped.
    LogisticGradient { weights: Vec<f64>, features: Vec<usize>, coord: usize, label: usize, positive: bool, bound: f64 },
    /// Behaves as `inner` on data points; `payload` is carried in the query
    /// description itself (a reserved value no data point ever produces).
    Reserved { payload: String, inner: Box<Component> },
}

fn clamp01(v: f64) -> f64 {
    // NaN never arises from finite inputs; map it to 0 defensively
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Component {
    /// The coordinate-identity query `x[coord]` for data in [0,1].
    pub fn identity(coord: usize) -> Self {
        Component::ClampedAffine { coord, offset: 0.0, slope: 1.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Component::Constant { value } => clamp01(*value),
            Component::ClampedAffine { coord, offset, slope } => clamp01(offset + slope * x[*coord]),
            Component::Threshold { coord, theta } => (x[*coord] <= *theta) as u8 as f64,
            Component::RewardCell { state, action } => {
                if x[0] == *state as f64 && x[1] == *action as f64 {
                    clamp01(x[2])
                } else {
                    0.0
                }
            }
            Component::VisitCell { state, action } => (x[0] == *state as f64 && x[1] == *action as f64) as u8 as f64,
            Component::SignVote { signs } => {
                let s: f64 = signs.iter().zip(x).map(|(&s, &v)| s as f64 * (v - 0.5)).sum();
                (s >= 0.0) as u8 as f64
            }
            Component::LogisticGradient { weights, features, coord, label, positive, bound } => {
                let z: f64 = weights.iter().zip(features).map(|(w, &f)| w * x[f]).sum();
                let y = if x[*label] >= 0.5 { 1.0 } else { -1.0 };
                let g = -y * x[features[*coord]] * sigmoid(-y * z);
                let part = if *positive { g.max(0.0) } else { (-g).max(0.0) };
                clamp01(part / bound)
            }
            Component::Reserved { inner, .. } => inner.eval(x),
        }
    }

    fn max_coord(&self) -> Option<usize> {
        match self {
            Component::Constant { .. } => None,
            Component::ClampedAffine { coord, .. } | Component::Threshold { coord, .. } => Some(*coord),
            Component::RewardCell { .. } => Some(2),
            Component::VisitCell { .. } => Some(1),
            Component::SignVote { signs } => signs.len().checked_sub(1),
            Component::LogisticGradient { features, label, .. } => {
                features.iter().copied().chain(std::iter::once(*label)).max()
            }
            Component::Reserved { inner, .. } => inner.max_coord(),
        }
    }

    /// Mean over the dataset, reading columns directly.
    pub fn empirical_mean(&self, s: &Dataset) -> f64 {
        let n = s.n() as f64;
        match self {
            Component::Constant { value } => clamp01(*value),
            Component::ClampedAffine { coord, offset, slope } => {
                let col = s.column(*coord);
                if *offset == 0.0 && *slope == 1.0 && col.iter().all(|v| (0.0..=1.0).contains(v)) {
                    return col.iter().sum::<f64>() / n;
                }
                col.iter().map(|&v| clamp01(offset + slope * v)).sum::<f64>() / n
            }
            Component::Threshold { coord, theta } => s.count_at_most(*coord, *theta) as f64 / n,
            Component::SignVote { signs } => {
                let mut score = vec![0.0f64; s.n()];
                for (i, &sg) in signs.iter().enumerate() {
                    if sg == 0 {
                        continue;
                    }
                    let sg = sg as f64;
                    for (acc, &v) in score.iter_mut().zip(s.column(i)) {
                        *acc += sg * (v - 0.5);
                    }
                }
                score.iter().filter(|&&v| v >= 0.0).count() as f64 / n
            }
            Component::Reserved { inner, .. } => inner.empirical_mean(s),
            _ => {
                let mut acc = 0.0;
                for i in 0..s.n() {
                    acc += self.eval(&s.point(i));
                }
                acc / n
            }
        }
    }

    /// Exact `E[component(X)]`, or `None` when this pair has no closed form.
    pub fn closed_form_mean(&self, dist: &Distribution) -> Result<Option<f64>> {
        Ok(match (self, dist) {
            (Component::Constant { value }, _) => Some(clamp01(*value)),
            (Component::ClampedAffine { coord, offset, slope }, _) => {
                Some(clamp01(dist.marginal(*coord)?.expect_clamped_affine(*offset, *slope)))
            }
            (Component::Threshold { coord, theta }, _) => Some(dist.marginal(*coord)?.cdf(*theta)),
            (Component::RewardCell { state, action }, Distribution::Mdp(m)) => {
                if *state >= m.states || *action >= m.actions {
                    Some(0.0)
                } else {
                    Some(m.reward(*state, *action) / (m.states * m.actions) as f64)
                }
            }
            (Component::VisitCell { state, action }, Distribution::Mdp(m)) => {
                if *state >= m.states || *action >= m.actions {
                    Some(0.0)
                } else {
                    Some(1.0 / (m.states * m.actions) as f64)
                }
            }
            (Component::SignVote { signs }, Distribution::BernoulliProduct { p }) => {
                Some(sign_vote_bernoulli(signs, p))
            }
            (Component::SignVote { signs }, Distribution::UniformBox { .. }) => {
                // a sum of independent symmetric continuous terms is >= 0 w.p. 1/2
                Some(if signs.iter().any(|&s| s != 0) { 0.5 } else { 1.0 })
            }
            (Component::Reserved { inner, .. }, _) => inner.closed_form_mean(dist)?,
            _ => None,
        })
    }
}

/// `P(sum_i s_i (x_i - 1/2) >= 0)` for independent `x_i ~ Bernoulli(p_i)`.
///
/// With `Y = sum_{s_i=+1} x_i + sum_{s_i=-1} (1 - x_i)` and `m` nonzero signs
/// the event is `Y >= m/2`; the law of `Y` is computed by convolution.
fn sign_vote_bernoulli(signs: &[i8], p: &[f64]) -> f64 {
    let mut law = vec![1.0f64];
    for (&s, &pi) in signs.iter().zip(p) {
        if s == 0 {
            continue;
        }
        let q = if s > 0 { pi } else { 1.0 - pi };
        let mut next = vec![0.0; law.len() + 1];
        for (k, &w) in law.iter().enumerate() {
            next[k] += w * (1.0 - q);
            next[k + 1] += w * q;
        }
        law = next;
    }
    let m = law.len() - 1;
    // Y >= m/2  <=>  2Y >= m
    law.iter().enumerate().filter(|(k, _)| 2 * k >= m).map(|(_, w)| w).sum::<f64>().min(1.0)
}

/// A statistical query: an ordered list of [0,1]-valued components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Component>", into = "Vec<Component>")]
pub struct Query {
    components: Vec<Component>,
    id: String,
}

impl From<Vec<Component>> for Query {
    fn from(components: Vec<Component>) -> Self {
        Query::new(components)
    }
}

impl From<Query> for Vec<Component> {
    fn from(q: Query) -> Self {
        q.components
    }
}

impl Query {
    pub fn new(components: Vec<Component>) -> Self {
        let canonical = serde_json::to_vec(&components).expect("components serialize");
        let digest = Sha256::digest(&canonical);
        let id = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Self { components, id }
    }

    /// Stable identifier: a hash of the canonical JSON description.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Smallest data width this query can be evaluated on.
    pub fn min_width(&self) -> usize {
        self.components.iter().filter_map(|c| c.max_coord()).map(|m| m + 1).max().unwrap_or(0)
    }

    /// Checks that every coordinate the query reads exists in width-`w` data.
    pub fn check_width(&self, width: usize) -> Result<()> {
        for c in &self.components {
            if let Some(m) = c.max_coord() {
                if m >= width {
                    return Err(invalid(format!(
                        "query {} reads coordinate {m} but data points have width {width}",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x);
        }
    }

    /// `q(S) = (1/n) sum_i q(X_i)`.
    pub fn empirical_mean(&self, s: &Dataset) -> Result<Vec<f64>> {
        self.check_width(s.width())?;
        Ok(self.components.iter().map(|c| c.empirical_mean(s)).collect())
    }

    /// Exact population mean, `None` if any component lacks a closed form.
    pub fn closed_form_mean(&self, dist: &Distribution) -> Result<Option<Vec<f64>>> {
        self.check_width(dist.width())?;
        let mut out = Vec::with_capacity(self.dim());
        for c in &self.components {
            match c.closed_form_mean(dist)? {
                Some(v) => out.push(v),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }
}
