//! Type B sessions without a state grid, with a per-round check that the
//! Gaussian noise can be split between the answer and the state update.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::session::{interact, RunResult, SessionOptions};
use crate::analysts::{AnalystClass, Space};
use crate::data::sample_dataset;
use crate::error::{Error, Result};
use crate::mechanisms::{Mechanism, MechanismKind, MechanismSpec};
use crate::privacy::{depth_continuous, DepthResult};
use crate::seeds::{derive_seed, Stream};

/// Tolerance of the noise-splitting identity.
pub const SPLIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousReport {
    pub run: RunResult,
    /// Smallest |eigenvalue| of the (symmetric definite) answer matrix `B`.
    pub lambda_min: f64,
    /// Depth at accuracy `accuracy_eps`.
    pub depth: DepthResult,
    pub rounds_checked: usize,
    /// max over rounds and coordinates of
    /// `|h_t − ψ_t(h_{t−1}, q_t(S) + ξ¹) − B ξ²|`.
    pub max_split_error: f64,
    pub passed: bool,
}

/// Runs the session described by `config` for `seed` and, for every round,
/// splits the recorded noise as `ξ = ξ¹ + ξ²` with `ξ¹ = u ⊙ ξ`,
/// `u ~ U[0,1]^{d_q}`, and recomputes `h_t` along the split path.
pub fn continuous_mode_session(config: &ExperimentConfig, seed: u64) -> Result<ContinuousReport> {
    let start = Instant::now();
    let analyst = config.analyst_for(seed)?;
    let (lambda, radius) = match analyst.class() {
        AnalystClass::ConservativeB { lambda, radius } => (*lambda, *radius),
        c => return Err(Error::IncompatiblePairing(format!("continuous mode needs a type B analyst, got {c:?}"))),
    };
    if analyst.space() != Space::Continuous {
        return Err(Error::IncompatiblePairing("continuous mode needs a continuous state space".into()));
    }
    if !matches!(config.mechanism, MechanismKind::Gaussian { .. }) {
        return Err(Error::IncompatiblePairing(format!(
            "continuous mode needs the unclamped Gaussian mechanism, got {}",
            config.mechanism.describe()
        )));
    }
    let (_, b) = analyst.linear_parts().expect("type B analysts are linear");
    let lambda_min = if b.rows() == b.cols() { b.definite_min_abs_eigenvalue() } else { None }
        .ok_or_else(|| crate::error::invalid("answer matrix B must be square, symmetric and definite"))?;
    let depth = depth_continuous(lambda, radius, analyst.dim(), lambda_min, config.accuracy_eps)?;

    let data = sample_dataset(&config.distribution, config.n, seed)?;
    let mut mech = Mechanism::new(MechanismSpec { kind: config.mechanism, seed })?;
    let opts = SessionOptions { mc_budget: config.mc_budget, oracle_seed: seed };
    let out = interact(&analyst, &mut mech, &data, &config.distribution, config.t, opts)?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Attack));
    let mut max_err = 0.0f64;
    for (i, round) in out.transcript.rounds().iter().enumerate() {
        let t = i + 1;
        let xi = out.transcript.noise(t)?;
        let xi1: Vec<f64> = xi.iter().map(|x| rng.random::<f64>() * x).collect();
        let xi2: Vec<f64> = xi.iter().zip(&xi1).map(|(x, y)| x - y).collect();
        let prev = out.trajectory.states[t - 1].to_real();
        let partial: Vec<f64> = round.empirical.iter().zip(&xi1).map(|(e, x)| e + x).collect();
        let split = analyst.transition(t, &prev, &partial)?;
        let bxi2 = b.matvec(&xi2);
        let actual = out.trajectory.states[t].to_real();
        for ((h, s), v) in actual.iter().zip(&split).zip(&bxi2) {
            max_err = max_err.max((h - s - v).abs());
        }
    }
    let run = RunResult::from_transcript(
        &out.transcript,
        config.hash(),
        seed,
        config.n,
        config.accuracy_eps,
        out.escapes,
        start.elapsed().as_secs_f64(),
    )?;
    Ok(ContinuousReport {
        rounds_checked: out.transcript.len(),
        passed: max_err <= SPLIT_TOLERANCE,
        max_split_error: max_err,
        lambda_min,
        depth,
        run,
    })
}
