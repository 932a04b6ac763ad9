//! Differential-privacy accounting and truncation-depth formulas.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mechanisms::MechanismKind;
use crate::schedule::Schedule;

/// An `(α, β)` differential-privacy guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpParams {
    pub alpha: f64,
    pub beta: f64,
}

impl DpParams {
    pub const ZERO: DpParams = DpParams { alpha: 0.0, beta: 0.0 };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(invalid(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(invalid(format!("beta must lie in [0,1], got {beta}")));
        }
        Ok(Self { alpha, beta })
    }

    /// Post-processing never weakens a guarantee.
    pub fn post_process(self) -> Self {
        self
    }
}

/// Closed-form depth `k_real` and the depth actually used, `max(1, ⌈k_real⌉)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthResult {
    pub k_real: f64,
    pub k_int: usize,
}

impl DepthResult {
    pub fn from_real(k_real: f64) -> Self {
        let k_real = k_real.max(0.0);
        Self { k_real, k_int: (k_real.ceil() as usize).max(1) }
    }

    pub fn from_int(k: usize) -> Self {
        Self { k_real: k as f64, k_int: k.max(1) }
    }
}

fn check_prob_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0,1), got {v}")))
    }
}

fn check_prob_closed(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0,1], got {v}")))
    }
}

/// Gaussian mechanism on `d_q`-dimensional queries over `n` samples:
/// ℓ2 sensitivity `√d_q / n`, so `α = √(2 ln(1.25/β)) · √d_q / (n σ)`.
pub fn gaussian_dp(sigma: f64, n: usize, d_q: usize, beta: f64) -> Result<DpParams> {
    check_prob_open("beta", beta)?;
    if !(sigma > 0.0) || n == 0 || d_q == 0 {
        return Err(invalid("gaussian_dp needs sigma > 0, n >= 1, d_q >= 1"));
    }
    let alpha = (2.0 * (1.25 / beta).ln()).sqrt() * (d_q as f64).sqrt() / (n as f64 * sigma);
    Ok(DpParams { alpha, beta })
}

/// Guarantee of a mechanism kind. Clamping is post-processing, so the clamped
/// Gaussian reports exactly the Gaussian guarantee.
pub fn mechanism_dp(kind: MechanismKind, n: usize, d_q: usize, beta: f64) -> Result<DpParams> {
    match kind {
        MechanismKind::Gaussian { sigma } => gaussian_dp(sigma, n, d_q, beta),
        MechanismKind::ClampedGaussian { sigma } => Ok(gaussian_dp(sigma, n, d_q, beta)?.post_process()),
        other => Err(Error::Unsupported(format!("{} is not differentially private", other.describe()))),
    }
}

/// `(Σ α_i, min(1, Σ β_i))`.
pub fn linear_compose(parts: &[DpParams]) -> Result<DpParams> {
    if parts.is_empty() {
        return Err(invalid("linear_compose needs at least one part"));
    }
    let alpha = parts.iter().map(|p| p.alpha).sum();
    let beta = parts.iter().map(|p| p.beta).sum::<f64>().min(1.0);
    Ok(DpParams { alpha, beta })
}

/// k-fold composition `(√(2k ln(1/β′))·α + 2kα², kβ + β′)`, using the
/// `e^α − 1 ≤ 2α` simplification, which needs `α ≤ 1`.
pub fn strong_compose(k: usize, alpha: f64, beta: f64, beta_prime: f64) -> Result<DpParams> {
    if !(alpha >= 0.0) {
        return Err(invalid(format!("alpha must be >= 0, got {alpha}")));
    }
    if alpha > 1.0 {
        return Err(Error::AlphaTooLarge(alpha));
    }
    check_prob_closed("beta", beta)?;
    check_prob_closed("beta'", beta_prime)?;
    if k == 0 {
        return Ok(DpParams { alpha: 0.0, beta: beta_prime });
    }
    let kf = k as f64;
    let a =
        if alpha == 0.0 { 0.0 } else { (2.0 * kf * (1.0 / beta_prime).ln()).sqrt() * alpha + 2.0 * kf * alpha * alpha };
    Ok(DpParams { alpha: a, beta: (kf * beta + beta_prime).min(1.0) })
}

/// Privacy of the hidden state at any round, via composition over the
/// truncation depth.
pub fn history_dp(mech: DpParams, depth: DepthResult, beta_prime: f64) -> Result<DpParams> {
    strong_compose(depth.k_int, mech.alpha, mech.beta, beta_prime)
}

/// `ln(L·C₁ / ((1−λ)·λ·Δ)) / ln(1/λ)`: past this depth the truncated
/// progressive analyst is within `λΔ` of the full one.
pub fn depth_progressive(lambda: f64, l: f64, c1: f64, delta: f64) -> Result<DepthResult> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(invalid(format!("progressive depth needs lambda in [0,1), got {lambda}")));
    }
    if !(l > 0.0 && c1 > 0.0 && delta > 0.0) {
        return Err(invalid("progressive depth needs L, C1, delta > 0"));
    }
    if lambda == 0.0 {
        return Ok(DepthResult { k_real: 0.0, k_int: 1 });
    }
    let arg = l * c1 / ((1.0 - lambda) * lambda * delta);
    Ok(DepthResult::from_real(arg.ln().max(0.0) / (1.0 / lambda).ln()))
}

/// Smallest `t >= 1` with `η_t < Δ / C₁`.
pub fn depth_conservative_a(schedule: &Schedule, delta: f64, c1: f64, t_max: usize) -> Result<DepthResult> {
    if !(delta > 0.0 && c1 > 0.0) {
        return Err(invalid("type A depth needs delta, C1 > 0"));
    }
    schedule.check_nonincreasing(t_max.max(1))?;
    let limit = delta / c1;
    (1..=t_max)
        .find(|&t| schedule.at(t) < limit)
        .map(DepthResult::from_int)
        .ok_or(Error::NoSaturation { horizon: t_max })
}

/// `ln(D / (Δλ)) / ln(1/λ)`.
pub fn depth_conservative_b(lambda: f64, d: f64, delta: f64) -> Result<DepthResult> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("type B depth needs lambda in (0,1), got {lambda}")));
    }
    if !(d > 0.0 && delta > 0.0) {
        return Err(invalid("type B depth needs D, delta > 0"));
    }
    Ok(DepthResult::from_real((d / (delta * lambda)).ln().max(0.0) / (1.0 / lambda).ln()))
}

/// `ln(D√d / (√λ_min · ε)) / ln(1/λ)` (leading constant 1).
pub fn depth_continuous(lambda: f64, d_radius: f64, dim: usize, lambda_min: f64, eps: f64) -> Result<DepthResult> {
    if !(lambda_min > 0.0) {
        return Err(invalid(format!("lambda_min must be > 0 (B_t definite), got {lambda_min}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("continuous depth needs lambda in (0,1), got {lambda}")));
    }
    if !(d_radius > 0.0 && eps > 0.0) || dim == 0 {
        return Err(invalid("continuous depth needs D, eps > 0 and d >= 1"));
    }
    let arg = d_radius * (dim as f64).sqrt() / (lambda_min.sqrt() * eps);
    Ok(DepthResult::from_real(arg.ln().max(0.0) / (1.0 / lambda).ln()))
}

/// `⌈√(K · d_q · ln max(t, 2)) / ε²⌉` with leading constant 1.
pub fn plan_samples(eps: f64, delta: f64, k: DepthResult, d_q: usize, t: usize) -> Result<usize> {
    plan_samples_scaled(eps, delta, k, d_q, t, 1.0)
}

pub fn plan_samples_scaled(
    eps: f64,
    delta: f64,
    k: DepthResult,
    d_q: usize,
    t: usize,
    multiplier: f64,
) -> Result<usize> {
    check_prob_open("eps", eps)?;
    check_prob_open("delta", delta)?;
    let kk = k.k_int.max(1) as f64;
    let n = multiplier * (kk * d_q as f64 * (t.max(2) as f64).ln()).sqrt() / (eps * eps);
    Ok(n.ceil() as usize)
}
