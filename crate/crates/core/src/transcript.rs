use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub t: usize,
    pub query_id: String,
    pub answer: Vec<f64>,
    pub empirical: Vec<f64>,
    pub true_mean: Vec<f64>,
    /// Monte-Carlo standard error of `true_mean`, absent when exact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_mean_stderr: Option<Vec<f64>>,
    /// Noise added by the mechanism this round, recorded for replay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub version: u32,
    pub mechanism: String,
    pub analyst: String,
    rounds: Vec<Round>,
}

impl Transcript {
    pub fn new(mechanism: impl Into<String>, analyst: impl Into<String>) -> Self {
        Self { version: TRANSCRIPT_VERSION, mechanism: mechanism.into(), analyst: analyst.into(), rounds: Vec::new() }
    }

    /// Appends a round; `t` must be the next index (1-based, no gaps).
    pub fn push(&mut self, round: Round) -> Result<()> {
        let expected = self.rounds.len() + 1;
        if round.t != expected {
            return Err(invalid(format!("round index {} out of order (expected {expected})", round.t)));
        }
        let d = round.answer.len();
        for (name, len) in [("empirical", round.empirical.len()), ("true_mean", round.true_mean.len())] {
            if len != d {
                return Err(invalid(format!("round {}: {name} has dimension {len}, answer {d}", round.t)));
            }
        }
        if let Some(noise) = &round.noise {
            if noise.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: noise.len() });
            }
        }
        self.rounds.push(round);
        Ok(())
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn answers(&self) -> Vec<Vec<f64>> {
        self.rounds.iter().map(|r| r.answer.clone()).collect()
    }

    /// Noise of round `t` (1-based).
    pub fn noise(&self, t: usize) -> Result<&[f64]> {
        self.rounds.get(t.wrapping_sub(1)).and_then(|r| r.noise.as_deref()).ok_or(Error::MissingNoiseLog(t))
    }

    /// Per-round `‖a_i − E[q_i]‖_∞`.
    pub fn per_round_errors(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| linf_gap(&r.answer, &r.true_mean)).collect()
    }

    /// `max_i ‖a_i − E[q_i]‖_∞`.
    pub fn generalization_error(&self) -> Result<f64> {
        if self.rounds.is_empty() {
            return Err(Error::EmptyTranscript);
        }
        Ok(self.per_round_errors().into_iter().fold(0.0, f64::max))
    }

    /// Fraction of rounds with `‖a_i − q_i(S)‖_∞ ≥ ε`.
    pub fn sample_accuracy_rate(&self, eps: f64) -> Result<f64> {
        if self.rounds.is_empty() {
            return Err(Error::EmptyTranscript);
        }
        let bad = self.rounds.iter().filter(|r| linf_gap(&r.answer, &r.empirical) >= eps).count();
        Ok(bad as f64 / self.rounds.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Transcript = serde_json::from_str(s)?;
        if raw.version != TRANSCRIPT_VERSION {
            return Err(Error::Unsupported(format!("transcript version {}", raw.version)));
        }
        // re-validate through push
        let mut out = Transcript::new(raw.mechanism, raw.analyst);
        for r in raw.rounds {
            out.push(r)?;
        }
        Ok(out)
    }

    /// CSV with header `t,query_id,answer_1..,empirical_1..,true_mean_1..`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.rounds.iter().map(|r| r.answer.len()).max().unwrap_or(0);
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "query_id".to_string()];
        for prefix in ["answer", "empirical", "true_mean"] {
            header.extend((1..=d).map(|j| format!("{prefix}_{j}")));
        }
        out.write_record(&header)?;
        for r in &self.rounds {
            let mut rec = vec![r.t.to_string(), r.query_id.clone()];
            for v in [&r.answer, &r.empirical, &r.true_mean] {
                rec.extend((0..d).map(|j| v.get(j).map(|x| format!("{x:?}")).unwrap_or_default()));
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn linf_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
