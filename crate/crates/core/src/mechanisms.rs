//! Statistical mechanisms: empirical, rounded-empirical, Gaussian and clamped
//! Gaussian, plus noise calibration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::query::Query;
use crate::seeds::{derive_seed, Stream};
use crate::transcript::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanismKind {
    Empirical,
    RoundedEmpirical { eps: f64 },
    Gaussian { sigma: f64 },
    ClampedGaussian { sigma: f64 },
}

impl MechanismKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MechanismKind::Empirical => Ok(()),
            MechanismKind::RoundedEmpirical { eps } => {
                if eps > 0.0 && eps <= 1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("rounded-empirical needs 0 < eps <= 1, got {eps}")))
                }
            }
            MechanismKind::Gaussian { sigma } | MechanismKind::ClampedGaussian { sigma } => {
                if sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(format!("gaussian mechanisms need sigma > 0, got {sigma}")))
                }
            }
        }
    }

    pub fn is_noisy(&self) -> bool {
        matches!(self, MechanismKind::Gaussian { .. } | MechanismKind::ClampedGaussian { .. })
    }

    pub fn describe(&self) -> String {
        match *self {
            MechanismKind::Empirical => "empirical".into(),
            MechanismKind::RoundedEmpirical { eps } => format!("rounded_empirical(eps={eps})"),
            MechanismKind::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
            MechanismKind::ClampedGaussian { sigma } => format!("clamped_gaussian(sigma={sigma})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    #[serde(flatten)]
    pub kind: MechanismKind,
    #[serde(default)]
    pub seed: u64,
}

/// What the mechanism returned for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub answer: Vec<f64>,
    pub empirical: Vec<f64>,
    pub noise: Option<Vec<f64>>,
}

/// A mechanism instance; its only state is the noise generator.
#[derive(Debug, Clone)]
pub struct Mechanism {
    kind: MechanismKind,
    rng: ChaCha8Rng,
}

impl Mechanism {
    pub fn new(spec: MechanismSpec) -> Result<Self> {
        spec.kind.validate()?;
        Ok(Self { kind: spec.kind, rng: ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, Stream::Mechanism)) })
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn answer(&mut self, s: &Dataset, q: &Query) -> Result<Response> {
        let empirical = empirical_answer(s, q)?;
        Ok(self.answer_empirical(empirical, s.n()))
    }

    /// Answers given a precomputed `q(S)` on a dataset of size `n`.
    pub fn answer_empirical(&mut self, empirical: Vec<f64>, n: usize) -> Response {
        let noise = match self.kind {
            MechanismKind::Gaussian { sigma } | MechanismKind::ClampedGaussian { sigma } => {
                Some(draw_noise(&mut self.rng, sigma, empirical.len()))
            }
            _ => None,
        };
        let answer = respond(self.kind, &empirical, n, noise.as_deref());
        Response { answer, empirical, noise }
    }
}

fn draw_noise(rng: &mut ChaCha8Rng, sigma: f64, d: usize) -> Vec<f64> {
    (0..d).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Deterministic part of every mechanism: the answer as a function of the
/// empirical value and the (recorded) noise. Replays go through here.
pub fn respond(kind: MechanismKind, empirical: &[f64], n: usize, noise: Option<&[f64]>) -> Vec<f64> {
    match kind {
        MechanismKind::Empirical => empirical.to_vec(),
        MechanismKind::RoundedEmpirical { eps } => empirical.iter().map(|&v| round_to_answer_grid(v, n, eps)).collect(),
        MechanismKind::Gaussian { .. } => add(empirical, noise.expect("noisy mechanism needs noise")),
        MechanismKind::ClampedGaussian { .. } => {
            clamp_box(&add(empirical, noise.expect("noisy mechanism needs noise")))
        }
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn empirical_answer(s: &Dataset, q: &Query) -> Result<Vec<f64>> {
    q.empirical_mean(s)
}

/// Nearest point of `{k·ε/(2n) : 0 <= k <= ⌊2n/ε⌋}`, ties to the even index.
pub fn round_to_answer_grid(v: f64, n: usize, eps: f64) -> f64 {
    let two_n = 2.0 * n as f64;
    let kmax = (two_n / eps).floor();
    let k = (v * two_n / eps).round_ties_even().clamp(0.0, kmax);
    k * eps / two_n
}

pub fn rounded_empirical_answer(s: &Dataset, q: &Query, eps: f64) -> Result<Vec<f64>> {
    MechanismKind::RoundedEmpirical { eps }.validate()?;
    let e = empirical_answer(s, q)?;
    Ok(respond(MechanismKind::RoundedEmpirical { eps }, &e, s.n(), None))
}

/// Number of distinct rounded-empirical answers, `(⌊2n/ε⌋ + 1)^{d_q}`, if it
/// fits in a u128.
pub fn answer_grid_size(n: usize, eps: f64, d_q: u32) -> Option<u128> {
    let per = (2.0 * n as f64 / eps).floor() as u128 + 1;
    per.checked_pow(d_q)
}

pub fn gaussian_answer(s: &Dataset, q: &Query, sigma: f64, rng: &mut ChaCha8Rng) -> Result<Response> {
    MechanismKind::Gaussian { sigma }.validate()?;
    let empirical = empirical_answer(s, q)?;
    let noise = draw_noise(rng, sigma, empirical.len());
    let answer = add(&empirical, &noise);
    Ok(Response { answer, empirical, noise: Some(noise) })
}

pub fn clamped_gaussian_answer(s: &Dataset, q: &Query, sigma: f64, rng: &mut ChaCha8Rng) -> Result<Response> {
    let mut r = gaussian_answer(s, q, sigma, rng)?;
    r.answer = clamp_box(&r.answer);
    Ok(r)
}

/// Coordinate-wise projection onto `[0,1]`.
pub fn clamp_box(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

/// `σ = ε / √(2 ln(2 t d_q / (ε δ)))`.
pub fn sigma_for(eps: f64, delta: f64, t: usize, d_q: usize) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("sigma_for needs eps, delta in (0,1)"));
    }
    if t == 0 || d_q == 0 {
        return Err(invalid("sigma_for needs t, d_q >= 1"));
    }
    let arg = 2.0 * t as f64 * d_q as f64 / (eps * delta);
    if arg <= 1.0 {
        return Err(invalid(format!("log argument {arg} <= 1 gives no real sigma")));
    }
    Ok(eps / (2.0 * arg.ln()).sqrt())
}

/// Union bound on `P(‖ξ‖_∞ ≥ ε)` for `d_q` Gaussian coordinates.
pub fn gaussian_tail_bound(eps: f64, sigma: f64, d_q: usize) -> f64 {
    2.0 * d_q as f64 * (-eps * eps / (2.0 * sigma * sigma)).exp()
}

pub fn sample_accuracy_rate(transcript: &Transcript, eps: f64) -> Result<f64> {
    transcript.sample_accuracy_rate(eps)
}
