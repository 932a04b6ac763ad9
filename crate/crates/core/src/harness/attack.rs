//! Attack demonstrations: the sign-correlation overfitting attack, the
//! window-one transcript encoder and the digit-interleaving analyst.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::session::RunResult;
use crate::analysts::adversary::{AdversarySpace, BijectionAdversary, InterleavingAdversary};
use crate::data::{sample_dataset, true_mean, Distribution};
use crate::error::{Error, Result};
use crate::mechanisms::{Mechanism, MechanismKind, MechanismSpec};
use crate::query::{Component, Query};
use crate::transcript::{Round, Transcript};

/// Bits a reserved query value can carry.
pub const RESERVED_BUDGET_BITS: u32 = 512;

/// Sign-correlation attack with the plain empirical mechanism.
pub fn overfit_attack(n: usize, t: usize, seed: u64) -> Result<RunResult> {
    overfit_attack_with(MechanismKind::Empirical, n, t, seed)
}

/// Asks `t` coordinate queries on `{0,1}^t` data with fair coins, then
/// `q*(x) = 1{Σ s_i (x_i − ½) ≥ 0}` with `s_i = sign(a_i − ½)`. The
/// attack reads raw answers of the whole transcript, so any other
/// mechanism is rejected.
pub fn overfit_attack_with(kind: MechanismKind, n: usize, t: usize, seed: u64) -> Result<RunResult> {
    if kind != MechanismKind::Empirical {
        return Err(Error::IncompatiblePairing(format!(
            "the overfitting attack reads the full unperturbed transcript; {} does not expose it",
            kind.describe()
        )));
    }
    let start = Instant::now();
    let width = t.max(1);
    let dist = Distribution::BernoulliProduct { p: vec![0.5; width] };
    let data = sample_dataset(&dist, n, seed)?;
    let mut mech = Mechanism::new(MechanismSpec { kind, seed })?;
    let mut transcript = Transcript::new(kind.describe(), format!("overfit_attack(t={t})"));
    let mut signs = Vec::with_capacity(t);
    let mut ask = |q: Query, transcript: &mut Transcript| -> Result<f64> {
        let resp = mech.answer(&data, &q)?;
        let mean = true_mean(&dist, &q, None, seed)?;
        let a = resp.answer[0];
        transcript.push(Round {
            t: transcript.len() + 1,
            query_id: q.id().to_string(),
            answer: resp.answer,
            empirical: resp.empirical,
            true_mean: mean.value,
            true_mean_stderr: None,
            noise: None,
        })?;
        Ok(a)
    };
    for i in 0..t {
        let a = ask(Query::new(vec![Component::identity(i)]), &mut transcript)?;
        signs.push(if a > 0.5 {
            1
        } else if a < 0.5 {
            -1
        } else {
            0
        });
    }
    let last = if t == 0 { Component::identity(0) } else { Component::SignVote { signs } };
    ask(Query::new(vec![last]), &mut transcript)?;
    let hash = format!("overfit_attack:n={n}:t={t}");
    RunResult::from_transcript(&transcript, hash, seed, n, 0.05, 0, start.elapsed().as_secs_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub window: usize,
    pub t: usize,
    pub bits: u32,
    /// Fixed-point codes of the answers the mechanism gave.
    pub true_codes: Vec<u64>,
    /// Codes recovered from the last query and answer alone.
    pub decoded_codes: Vec<u64>,
    pub exact: bool,
    /// Set when the reserved-value budget ran out.
    pub failure: Option<String>,
}

/// Runs the window-one attacker against the empirical mechanism for `t`
/// rounds at `bits` bits per answer, then decodes the full transcript from
/// its final state. Windows larger than one see strictly more, so the
/// construction is the same.
pub fn counterexample_demo(window: usize, t: usize, bits: u32) -> Result<CounterexampleReport> {
    if window == 0 {
        return Err(crate::error::invalid("window must be >= 1"));
    }
    let dist = Distribution::UniformBox { dim: 1 };
    let data = sample_dataset(&dist, 1000, 0)?;
    let mut mech = Mechanism::new(MechanismSpec { kind: MechanismKind::Empirical, seed: 0 })?;
    let mut adv = BijectionAdversary::new(bits, RESERVED_BUDGET_BITS)?;
    let mut true_codes = Vec::with_capacity(t);
    let mut failure = None;
    for _ in 0..t {
        let q = adv.query();
        let a = mech.answer(&data, &q)?.answer[0];
        match adv.step(&q, a) {
            Ok(()) => true_codes.push(adv.code(a)),
            Err(Error::PrecisionExhausted(msg)) => {
                failure = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let decoded_codes = adv.decode_transcript();
    let exact = failure.is_none() && decoded_codes == true_codes;
    Ok(CounterexampleReport { window, t, bits, true_codes, decoded_codes, exact, failure })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleavingReport {
    pub lambda: f64,
    pub digits: u32,
    pub t: usize,
    pub space: AdversarySpace,
    /// Answers as recorded at the digit budget.
    pub recorded: Vec<f64>,
    pub decoded: Option<Vec<f64>>,
    pub exact: bool,
    pub correct_answers: usize,
    pub state_digits: u32,
    pub failure: Option<String>,
}

/// Runs the interleaving analyst (`h_t = λ·c(h_{t−1}, a_t)`, adaptive
/// threshold queries) against the empirical mechanism and tries to read
/// every answer back from the final state.
pub fn interleaving_demo(
    lambda: f64,
    digits: u32,
    t: usize,
    space: AdversarySpace,
    seed: u64,
) -> Result<InterleavingReport> {
    let dist = Distribution::UniformBox { dim: 1 };
    let data = sample_dataset(&dist, 1000, seed)?;
    let mut mech = Mechanism::new(MechanismSpec { kind: MechanismKind::Empirical, seed })?;
    let mut adv = InterleavingAdversary::new(lambda, 1.0, digits, space)?;
    let mut recorded = Vec::with_capacity(t);
    let mut last = None;
    for _ in 0..t {
        let q = adv.next_query(last);
        let a = mech.answer(&data, &q)?.answer[0];
        recorded.push(adv.recorded(a)?);
        adv.step(a)?;
        last = Some(a);
    }
    let (decoded, failure) = match adv.decode_transcript() {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let correct_answers =
        decoded.as_ref().map_or(0, |d| d.iter().zip(&recorded).filter(|(x, y)| x.to_bits() == y.to_bits()).count());
    Ok(InterleavingReport {
        lambda,
        digits,
        t,
        space,
        exact: decoded.as_ref() == Some(&recorded),
        correct_answers,
        state_digits: adv.state.places,
        recorded,
        decoded,
        failure,
    })
}
