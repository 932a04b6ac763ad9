//! The interaction loop between one analyst and one mechanism.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::analysts::{Analyst, AnalystClass, Space};
use crate::data::{sample_dataset, true_mean, Dataset, Distribution};
use crate::error::{Error, Result};
use crate::mechanisms::{Mechanism, MechanismSpec};
use crate::transcript::{Round, Transcript};
use crate::truncation::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SessionOptions {
    pub mc_budget: Option<usize>,
    /// Seed of the Monte-Carlo stream used for true means.
    pub oracle_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutput {
    pub transcript: Transcript,
    pub trajectory: Trajectory,
    /// Rounds after which a type B state lay outside its declared ball.
    pub escapes: usize,
}

/// Runs `t` rounds: the query of round `r` is `f(h_{r−1})`, the mechanism
/// answers it on `data`, and the analyst absorbs the answer. True means
/// come from `dist`.
///
/// Type B analysts are watched for escapes from their radius-`D` ball; in
/// continuous mode an escape aborts the run, on the grid it is counted.
pub fn interact(
    analyst: &Analyst,
    mechanism: &mut Mechanism,
    data: &Dataset,
    dist: &Distribution,
    t: usize,
    opts: SessionOptions,
) -> Result<SessionOutput> {
    let mut transcript = Transcript::new(mechanism.kind().describe(), analyst.describe());
    let mut state = analyst.initial()?;
    let mut states = Vec::with_capacity(t + 1);
    states.push(state.h.clone());
    let radius = match analyst.class() {
        AnalystClass::ConservativeB { radius, .. } => Some(*radius),
        _ => None,
    };
    let mut escapes = 0;
    for round in 1..=t {
        let q = analyst.query(&state);
        if q.dim() != analyst.query_dim() {
            return Err(Error::DimensionMismatch { expected: analyst.query_dim(), actual: q.dim() });
        }
        q.check_width(data.width())?;
        let resp = mechanism.answer(data, &q)?;
        let mean = true_mean(dist, &q, opts.mc_budget, opts.oracle_seed)?;
        transcript.push(Round {
            t: round,
            query_id: q.id().to_string(),
            answer: resp.answer.clone(),
            empirical: resp.empirical,
            true_mean: mean.value,
            true_mean_stderr: mean.std_error,
            noise: resp.noise,
        })?;
        state = analyst.step(&state, &resp.answer)?;
        if let Some(radius) = radius {
            let norm = analyst.norm().of(&state.h.to_real());
            if norm > radius {
                if analyst.space() == Space::Continuous {
                    return Err(Error::Escape { round, norm, radius });
                }
                escapes += 1;
            }
        }
        states.push(state.h.clone());
    }
    Ok(SessionOutput { transcript, trajectory: Trajectory { states }, escapes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config_hash: String,
    pub seed: u64,
    pub n: usize,
    pub t: usize,
    /// `‖a_i − E[q_i]‖_∞` per round.
    pub per_round_error: Vec<f64>,
    pub max_error: f64,
    /// Error of the last round (the attack query in overfitting runs).
    pub final_error: f64,
    /// Fraction of rounds with `‖a_i − q_i(S)‖_∞ ≥ accuracy_eps`.
    pub sample_accuracy_rate: f64,
    pub accuracy_eps: f64,
    pub escapes: usize,
    pub wall_time_secs: f64,
}

impl RunResult {
    pub fn from_transcript(
        transcript: &Transcript,
        config_hash: String,
        seed: u64,
        n: usize,
        accuracy_eps: f64,
        escapes: usize,
        wall_time_secs: f64,
    ) -> Result<Self> {
        let per_round_error = transcript.per_round_errors();
        Ok(Self {
            config_hash,
            seed,
            n,
            t: transcript.len(),
            max_error: transcript.generalization_error()?,
            final_error: *per_round_error.last().expect("non-empty transcript"),
            per_round_error,
            sample_accuracy_rate: transcript.sample_accuracy_rate(accuracy_eps)?,
            accuracy_eps,
            escapes,
            wall_time_secs,
        })
    }
}

/// One full session for `seed`: dataset, analyst instance and mechanism
/// noise all derive from it.
pub fn run_session(config: &ExperimentConfig, seed: u64) -> Result<(Transcript, RunResult)> {
    let (out, result) = run_session_detailed(config, seed)?;
    Ok((out.transcript, result))
}

pub fn run_session_detailed(config: &ExperimentConfig, seed: u64) -> Result<(SessionOutput, RunResult)> {
    let start = Instant::now();
    let analyst = config.analyst_for(seed)?;
    let data = sample_dataset(&config.distribution, config.n, seed)?;
    let mut mech = Mechanism::new(MechanismSpec { kind: config.mechanism, seed })?;
    let opts = SessionOptions { mc_budget: config.mc_budget, oracle_seed: seed };
    let out = interact(&analyst, &mut mech, &data, &config.distribution, config.t, opts)?;
    let result = RunResult::from_transcript(
        &out.transcript,
        config.hash(),
        seed,
        config.n,
        config.accuracy_eps,
        out.escapes,
        start.elapsed().as_secs_f64(),
    )?;
    Ok((out, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysts::{AnalystSpec, Family, QueryMap};
    use crate::grid::Norm;
    use crate::linalg::Matrix;
    use crate::mechanisms::MechanismKind;
    use crate::query::Component;

    fn constant_analyst(a: f64, b: f64) -> Analyst {
        Analyst::new(AnalystSpec {
            family: Family::Linear {
                a: Matrix::scalar(a),
                b: Matrix::scalar(b),
                queries: QueryMap::Constant { components: vec![Component::identity(0)] },
            },
            space: Space::Continuous,
            norm: Norm::L2,
        })
        .unwrap()
    }

    #[test]
    fn non_adaptive_exact_case() {
        let an = constant_analyst(0.0, 0.0);
        let data = Dataset::from_scalars(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        let mut mech = Mechanism::new(MechanismSpec { kind: MechanismKind::Empirical, seed: 0 }).unwrap();
        let dist = Distribution::bernoulli(0.5);
        let out = interact(&an, &mut mech, &data, &dist, 5, SessionOptions::default()).unwrap();
        assert!(out.transcript.answers().iter().all(|a| a == &vec![0.5]));
        assert_eq!(out.transcript.generalization_error().unwrap(), 0.0);
    }

    #[test]
    fn hand_iterated_states() {
        let an = constant_analyst(0.5, 1.0);
        let data = Dataset::from_scalars(&[1.0, 0.0]).unwrap();
        let mut mech = Mechanism::new(MechanismSpec { kind: MechanismKind::Empirical, seed: 0 }).unwrap();
        let out = interact(&an, &mut mech, &data, &Distribution::bernoulli(0.5), 3, SessionOptions::default()).unwrap();
        let hs: Vec<f64> = out.trajectory.states.iter().map(|h| h.to_real()[0]).collect();
        assert_eq!(hs, vec![0.0, 0.5, 0.75, 0.875]);
    }

    #[test]
    fn per_round_error_is_bookkept() {
        let an = constant_analyst(0.0, 0.0);
        let dist = Distribution::bernoulli(0.3);
        let data = sample_dataset(&dist, 50, 4).unwrap();
        let mut mech = Mechanism::new(MechanismSpec { kind: MechanismKind::Empirical, seed: 0 }).unwrap();
        let out = interact(&an, &mut mech, &data, &dist, 3, SessionOptions::default()).unwrap();
        let direct = (data.column(0).iter().sum::<f64>() / 50.0 - 0.3).abs();
        for e in out.transcript.per_round_errors() {
            assert!((e - direct).abs() < 1e-15);
        }
    }
}
