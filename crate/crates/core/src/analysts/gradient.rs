//! Gradient-descent analysts. Per-sample gradients are reported through
//! `[0,1]`-valued queries: coordinate `j` of the gradient is split into its
//! positive and negative parts, each divided by the declared bound `G` and
//! clamped, and the analyst decodes `g_j = G (a⁺_j − a⁻_j)`. The encoding is
//! linear with zero offset, so a zero answer decodes to a zero gradient.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Norm;
use crate::linalg::Matrix;
use crate::query::{Component, Query};
use crate::schedule::Schedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    /// `ℓ(h; x) = ½‖h − x‖²` on the first `dim` data coordinates (β = μ = 1).
    Quadratic { dim: usize },
    /// `ℓ(h; x) = ½ Σ_j c_j (h_j − x_j)²` with curvatures `c_j` evenly spread
    /// over `[mu, beta]`.
    CustomSmooth { dim: usize, beta: f64, mu: f64 },
    /// Logistic loss on features `x[0..dim]` with a {0,1} label at `x[dim]`.
    /// Smoothness `dim / 4` for features in [0,1]; not strongly convex.
    Logistic { dim: usize },
}

impl LossSpec {
    pub fn dim(&self) -> usize {
        match self {
            LossSpec::Quadratic { dim } | LossSpec::CustomSmooth { dim, .. } | LossSpec::Logistic { dim } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(invalid("loss needs dim >= 1"));
        }
        if let LossSpec::CustomSmooth { beta, mu, .. } = self {
            if !(*mu >= 0.0 && beta >= mu && beta.is_finite()) {
                return Err(invalid(format!("custom-smooth loss needs beta >= mu >= 0, got beta={beta}, mu={mu}")));
            }
        }
        Ok(())
    }

    /// Smoothness `β` of the unregularized loss.
    pub fn beta(&self) -> f64 {
        match self {
            LossSpec::Quadratic { .. } => 1.0,
            LossSpec::CustomSmooth { beta, .. } => *beta,
            LossSpec::Logistic { dim } => *dim as f64 / 4.0,
        }
    }

    /// Strong convexity `μ` of the unregularized loss.
    pub fn mu(&self) -> f64 {
        match self {
            LossSpec::Quadratic { .. } => 1.0,
            LossSpec::CustomSmooth { mu, .. } => *mu,
            LossSpec::Logistic { .. } => 0.0,
        }
    }

    /// Curvature of coordinate `j` for the separable quadratic losses.
    fn curvature(&self, j: usize) -> f64 {
        match self {
            LossSpec::Quadratic { .. } => 1.0,
            LossSpec::CustomSmooth { dim, beta, mu } => {
                if *dim == 1 {
                    *beta
                } else {
                    mu + (beta - mu) * j as f64 / (*dim - 1) as f64
                }
            }
            LossSpec::Logistic { .. } => unreachable!("logistic loss is not separable"),
        }
    }

    /// Data width the loss reads.
    pub fn data_width(&self) -> usize {
        match self {
            LossSpec::Logistic { dim } => dim + 1,
            _ => self.dim(),
        }
    }

    /// Query whose components are the encoded per-sample gradient at `h`:
    /// `[g⁺_1, g⁻_1, g⁺_2, g⁻_2, …] / G`.
    pub fn gradient_query(&self, h: &[f64], bound: f64) -> Query {
        let dim = self.dim();
        let mut comps = Vec::with_capacity(2 * dim);
        for j in 0..dim {
            match self {
                LossSpec::Logistic { .. } => {
                    for positive in [true, false] {
                        comps.push(Component::LogisticGradient {
                            weights: h.to_vec(),
                            features: (0..dim).collect(),
                            coord: j,
                            label: dim,
                            positive,
                            bound,
                        });
                    }
                }
                _ => {
                    // per-sample gradient c (h_j − x_j) = c h_j − c x_j
                    let c = self.curvature(j);
                    comps.push(Component::ClampedAffine { coord: j, offset: c * h[j] / bound, slope: -c / bound });
                    comps.push(Component::ClampedAffine { coord: j, offset: -c * h[j] / bound, slope: c / bound });
                }
            }
        }
        Query::new(comps)
    }

    /// Exact gradient of the population/empirical loss for the quadratic
    /// families given the data mean of the first `dim` coordinates.
    pub fn quadratic_gradient(&self, h: &[f64], data_mean: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|j| self.curvature(j) * (h[j] - data_mean[j])).collect()
    }
}

/// `g = G (a⁺ − a⁻)` for an interleaved encoding of length `2·dim`.
pub fn decode_gradient(a: &[f64], bound: f64) -> Vec<f64> {
    a.chunks_exact(2).map(|p| bound * (p[0] - p[1])).collect()
}

/// The decoding matrix `M` (`dim × 2 dim`), so that `decode(a) = M a`.
pub fn decoding_matrix(dim: usize, bound: f64) -> Matrix {
    let mut data = vec![0.0; dim * 2 * dim];
    for j in 0..dim {
        data[j * 2 * dim + 2 * j] = bound;
        data[j * 2 * dim + 2 * j + 1] = -bound;
    }
    Matrix::new(dim, 2 * dim, data).expect("finite entries")
}

/// `‖M‖_{p→p}` for the decoding matrix, in closed form.
pub fn decoding_norm(bound: f64, norm: Norm) -> f64 {
    match norm {
        Norm::L1 => bound,
        Norm::L2 => bound * std::f64::consts::SQRT_2,
        Norm::Linf => 2.0 * bound,
    }
}

/// `h − η_t · grad` with `η_t` from a schedule that must be nonincreasing
/// up to `t`.
pub fn gd_step_a(h: &[f64], grad: &[f64], t: usize, schedule: &Schedule) -> Result<Vec<f64>> {
    if h.len() != grad.len() {
        return Err(Error::DimensionMismatch { expected: h.len(), actual: grad.len() });
    }
    schedule.check_nonincreasing(t.max(1))?;
    let eta = schedule.at(t);
    Ok(h.iter().zip(grad).map(|(x, g)| x - eta * g).collect())
}

/// `λ = 1 − ηβμ/(β+μ)`; `η` must not exceed `2/(β+μ)`.
pub fn gd_contraction(eta: f64, beta: f64, mu: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(invalid(format!("step size must be > 0, got {eta}")));
    }
    if beta + mu <= 0.0 {
        return Ok(1.0);
    }
    let limit = 2.0 / (beta + mu);
    if eta > limit {
        return Err(invalid(format!("step size {eta} exceeds 2/(beta+mu) = {limit}")));
    }
    Ok(1.0 - eta * beta * mu / (beta + mu))
}

/// Constant-step update `h − η·grad` for the given loss plus an optional ℓ2
/// regularizer of weight `reg` (folded into `grad` by the caller or here).
/// Returns the new weights and the declared contraction factor.
pub fn gd_step_b(h: &[f64], grad: &[f64], eta: f64, loss: &LossSpec, reg: f64) -> Result<(Vec<f64>, f64)> {
    if h.len() != grad.len() {
        return Err(Error::DimensionMismatch { expected: h.len(), actual: grad.len() });
    }
    let lambda = gd_contraction(eta, loss.beta() + reg, loss.mu() + reg)?;
    let next = h.iter().zip(grad).map(|(x, g)| x - eta * (g + reg * x)).collect();
    Ok((next, lambda))
}
