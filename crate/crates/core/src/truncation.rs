//! Truncated analysts: counterparts of a full analyst that only see `k`
//! answers, and checks that they end up in the same state.
//!
//! Trajectories are indexed like the analyst: `states[t]` is the state after
//! `t` answers, with `states[0] = 0`.

use serde::{Deserialize, Serialize};

use crate::analysts::{Analyst, AnalystClass, Hidden};
use crate::data::{sample_dataset, Dataset, Distribution};
use crate::error::{invalid, Error, Result};
use crate::grid::Norm;
use crate::harness::session::{interact, SessionOptions};
use crate::mechanisms::{respond, Mechanism, MechanismKind, MechanismSpec};
use crate::privacy::{depth_conservative_a, depth_conservative_b, depth_progressive, DepthResult};
use crate::transcript::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationKind {
    /// Zero state `k` rounds back, then replay the full analyst's answers.
    ProgressiveLastK,
    /// Recorded answers for rounds `<= k`, zero answers afterwards.
    ConservativeAFirstK,
    /// Zero state `k` rounds back, then query the mechanism afresh with the
    /// full run's noise draws.
    ConservativeBLastK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationMode {
    pub kind: TruncationKind,
    pub k: usize,
}

impl TruncationMode {
    pub fn new(kind: TruncationKind, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("truncation depth must be >= 1"));
        }
        Ok(Self { kind, k })
    }

    /// The construction matching an analyst class.
    pub fn for_class(class: &AnalystClass, k: usize) -> Result<Self> {
        let kind = match class {
            AnalystClass::Progressive { .. } => TruncationKind::ProgressiveLastK,
            AnalystClass::ConservativeA { .. } => TruncationKind::ConservativeAFirstK,
            AnalystClass::ConservativeB { .. } => TruncationKind::ConservativeBLastK,
        };
        Self::new(kind, k)
    }

    fn check_class(&self, class: &AnalystClass) -> Result<()> {
        let ok = matches!(
            (self.kind, class),
            (TruncationKind::ProgressiveLastK, AnalystClass::Progressive { .. })
                | (TruncationKind::ConservativeAFirstK, AnalystClass::ConservativeA { .. })
                | (TruncationKind::ConservativeBLastK, AnalystClass::ConservativeB { .. })
        );
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatiblePairing(format!("{:?} truncation for a {class:?} analyst", self.kind)))
        }
    }
}

/// States `h_0, h_1, …, h_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Hidden>,
}

impl Trajectory {
    /// Number of answers absorbed (`T`).
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn at(&self, t: usize) -> Result<&Hidden> {
        self.states
            .get(t)
            .ok_or_else(|| invalid(format!("trajectory has no state at t={t} (horizon {})", self.horizon())))
    }
}

/// What an interactive replay needs to re-ask queries.
#[derive(Debug, Clone, Copy)]
pub struct ReplayContext<'a> {
    pub data: &'a Dataset,
    pub mechanism: MechanismKind,
}

/// The full analyst's trajectory, recomputed from the recorded answers.
pub fn full_trajectory(analyst: &Analyst, full: &Transcript) -> Result<Trajectory> {
    let mut state = analyst.initial()?;
    let mut states = Vec::with_capacity(full.len() + 1);
    states.push(state.h.clone());
    for round in full.rounds() {
        state = analyst.step(&state, &round.answer)?;
        states.push(state.h.clone());
    }
    Ok(Trajectory { states })
}

/// `h_t^k` for every `t` covered by the transcript.
pub fn truncated_replay(
    full: &Transcript,
    analyst: &Analyst,
    mode: TruncationMode,
    ctx: Option<ReplayContext<'_>>,
) -> Result<Trajectory> {
    mode.check_class(analyst.class())?;
    let horizon = full.len();
    let k = mode.k;
    let zero = Hidden::zeros(analyst.dim(), analyst.space())?;
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(zero.clone());
    match mode.kind {
        TruncationKind::ProgressiveLastK => {
            let answers = full.answers();
            for t in 1..=horizon {
                let start = t.saturating_sub(k);
                let mut h = zero.clone();
                for j in start + 1..=t {
                    h = analyst.step_from(j, &h, &answers[j - 1])?;
                }
                states.push(h);
            }
        }
        TruncationKind::ConservativeAFirstK => {
            let silent = vec![0.0; analyst.query_dim()];
            let mut h = zero;
            for (i, round) in full.rounds().iter().enumerate() {
                let t = i + 1;
                let a = if t <= k { &round.answer } else { &silent };
                h = analyst.step_from(t, &h, a)?;
                states.push(h.clone());
            }
        }
        TruncationKind::ConservativeBLastK => {
            let ctx = ctx.ok_or_else(|| invalid("type B truncation re-asks queries and needs the dataset"))?;
            let noisy = ctx.mechanism.is_noisy();
            let noise: Vec<Option<&[f64]>> =
                (1..=horizon).map(|t| if noisy { full.noise(t).map(Some) } else { Ok(None) }).collect::<Result<_>>()?;
            let n = ctx.data.n();
            for t in 1..=horizon {
                let start = t.saturating_sub(k);
                let mut h = zero.clone();
                for j in start + 1..=t {
                    let empirical = analyst.query_at(&h.to_real()).empirical_mean(ctx.data)?;
                    let a = respond(ctx.mechanism, &empirical, n, noise[j - 1]);
                    h = analyst.step_from(j, &h, &a)?;
                }
                states.push(h);
            }
        }
    }
    Ok(Trajectory { states })
}

/// `‖h_t − h_t^k‖` in the analyst's norm.
pub fn closeness_gap(full: &Trajectory, trunc: &Trajectory, t: usize, norm: Norm) -> Result<f64> {
    full.at(t)?.distance(trunc.at(t)?, norm)
}

/// Truncation depth from the formula matching the analyst's class, at the
/// analyst's grid resolution.
pub fn depth_for(analyst: &Analyst, t_max: usize) -> Result<DepthResult> {
    let delta = analyst.space().resolution().ok_or_else(|| invalid("identity checks need a grid space"))?;
    match analyst.class() {
        AnalystClass::Progressive { lambda, l } => {
            let l = l.ok_or_else(|| Error::Unsupported("analyst declares no answer-Lipschitz constant".into()))?;
            depth_progressive(*lambda, l, analyst.c1(), delta)
        }
        AnalystClass::ConservativeA { schedule } => depth_conservative_a(schedule, delta, analyst.c1(), t_max),
        AnalystClass::ConservativeB { lambda, radius } => depth_conservative_b(*lambda, *radius, delta),
    }
}

/// A round where the truncated analyst differs from the full one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub seed: u64,
    pub t: usize,
    pub full: Hidden,
    pub truncated: Hidden,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceIdentity {
    pub seed: u64,
    pub rounds: usize,
    /// Rounds `t` with `h_t^k != h_t`.
    pub state_mismatches: usize,
    /// Rounds `t` whose query `f(h_{t-1}^k)` has a different id than `q_t`.
    pub query_mismatches: usize,
    pub max_gap: f64,
    pub first: Option<Counterexample>,
}

impl InstanceIdentity {
    pub fn holds(&self) -> bool {
        self.state_mismatches == 0 && self.query_mismatches == 0
    }
}

/// Compares the truncated replay at depth `mode.k` with the full run state
/// by state (grid states compare as integers) and query by query.
pub fn check_identity(
    analyst: &Analyst,
    full: &Transcript,
    mode: TruncationMode,
    ctx: Option<ReplayContext<'_>>,
    seed: u64,
) -> Result<InstanceIdentity> {
    let reference = full_trajectory(analyst, full)?;
    let trunc = truncated_replay(full, analyst, mode, ctx)?;
    let mut out = InstanceIdentity {
        seed,
        rounds: full.len(),
        state_mismatches: 0,
        query_mismatches: 0,
        max_gap: 0.0,
        first: None,
    };
    for (t, round) in full.rounds().iter().enumerate().map(|(i, r)| (i + 1, r)) {
        if analyst.query_at(&trunc.states[t - 1].to_real()).id() != round.query_id {
            out.query_mismatches += 1;
        }
        let (h, hk) = (&reference.states[t], &trunc.states[t]);
        if h != hk {
            let gap = h.distance(hk, analyst.norm())?;
            out.state_mismatches += 1;
            out.max_gap = out.max_gap.max(gap);
            if out.first.is_none() {
                out.first = Some(Counterexample { seed, t, full: h.clone(), truncated: hk.clone(), gap });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub k: usize,
    pub depth: Option<DepthResult>,
    pub t_max: usize,
    pub instances: Vec<InstanceIdentity>,
    pub holds: bool,
    /// Fraction of (instance, round) pairs with a state mismatch.
    pub mismatch_rate: f64,
}

impl IdentityReport {
    pub fn from_instances(
        k: usize,
        depth: Option<DepthResult>,
        t_max: usize,
        instances: Vec<InstanceIdentity>,
    ) -> Self {
        let rounds: usize = instances.iter().map(|i| i.rounds).sum();
        let bad: usize = instances.iter().map(|i| i.state_mismatches).sum();
        Self {
            k,
            depth,
            t_max,
            holds: instances.iter().all(InstanceIdentity::holds),
            mismatch_rate: if rounds == 0 { 0.0 } else { bad as f64 / rounds as f64 },
            instances,
        }
    }

    pub fn counterexamples(&self) -> impl Iterator<Item = &Counterexample> {
        self.instances.iter().filter_map(|i| i.first.as_ref())
    }
}

/// Runs the analyst against `mechanism` on fresh data for each seed and
/// checks `h_t^k = h_t` for all `t <= t_max`, with `k` from the class's
/// depth formula unless overridden.
pub fn identity_depth_check(
    analyst: &Analyst,
    mechanism: MechanismKind,
    dist: &Distribution,
    n: usize,
    t_max: usize,
    seeds: &[u64],
    k_override: Option<usize>,
) -> Result<IdentityReport> {
    let depth = match k_override {
        Some(_) => None,
        None => Some(depth_for(analyst, t_max)?),
    };
    let k = k_override.or(depth.map(|d| d.k_int)).expect("depth or override");
    let mode = TruncationMode::for_class(analyst.class(), k)?;
    let mut instances = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let data = sample_dataset(dist, n, seed)?;
        let mut mech = Mechanism::new(MechanismSpec { kind: mechanism, seed })?;
        let opts = SessionOptions { mc_budget: None, oracle_seed: seed };
        let out = interact(analyst, &mut mech, &data, dist, t_max, opts)?;
        let ctx = ReplayContext { data: &data, mechanism };
        instances.push(check_identity(analyst, &out.transcript, mode, Some(ctx), seed)?);
    }
    Ok(IdentityReport::from_instances(k, depth, t_max, instances))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysts::{AnalystSpec, Family, QueryMap, Space};
    use crate::linalg::Matrix;
    use crate::query::Component;
    use crate::transcript::Round;

    fn scalar(space: Space) -> Analyst {
        Analyst::new(AnalystSpec {
            family: Family::Linear {
                a: Matrix::scalar(0.5),
                b: Matrix::scalar(1.0),
                queries: QueryMap::Constant { components: vec![Component::identity(0)] },
            },
            space,
            norm: Norm::L2,
        })
        .unwrap()
    }

    fn constant_transcript(an: &Analyst, answers: &[f64]) -> Transcript {
        let mut tr = Transcript::new("test", an.describe());
        let id = an.query_at(&[0.0]).id().to_string();
        for (i, &a) in answers.iter().enumerate() {
            tr.push(Round {
                t: i + 1,
                query_id: id.clone(),
                answer: vec![a],
                empirical: vec![a],
                true_mean: vec![a],
                true_mean_stderr: None,
                noise: None,
            })
            .unwrap();
        }
        tr
    }

    #[test]
    fn hand_iterated_truncation() {
        let an = scalar(Space::Continuous);
        let tr = constant_transcript(&an, &[0.5, 0.5, 0.5]);
        let full = full_trajectory(&an, &tr).unwrap();
        assert_eq!(full.at(3).unwrap().to_real(), vec![0.875]);
        let mode = TruncationMode::new(TruncationKind::ProgressiveLastK, 2).unwrap();
        let trunc = truncated_replay(&tr, &an, mode, None).unwrap();
        assert_eq!(trunc.at(3).unwrap().to_real(), vec![0.75]);
        assert!((closeness_gap(&full, &trunc, 3, Norm::L2).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(closeness_gap(&full, &full, 3, Norm::L2).unwrap(), 0.0);
        assert!(closeness_gap(&full, &trunc, 4, Norm::L2).is_err());
        // k >= t reproduces the full run
        let deep = truncated_replay(&tr, &an, TruncationMode::new(TruncationKind::ProgressiveLastK, 3).unwrap(), None)
            .unwrap();
        assert_eq!(deep, full);
        assert!(TruncationMode::new(TruncationKind::ProgressiveLastK, 0).is_err());
        assert!(truncated_replay(&tr, &an, TruncationMode::new(TruncationKind::ConservativeAFirstK, 1).unwrap(), None)
            .is_err());
    }

    #[test]
    fn memoryless_analyst_needs_one_answer() {
        let an = Analyst::new(AnalystSpec {
            family: Family::Linear {
                a: Matrix::scalar(0.0),
                b: Matrix::scalar(1.0),
                queries: QueryMap::Constant { components: vec![Component::identity(0)] },
            },
            space: Space::grid(1e-3),
            norm: Norm::L2,
        })
        .unwrap();
        let tr = constant_transcript(&an, &[0.1, 0.7, 0.3, 0.9]);
        let r = check_identity(&an, &tr, TruncationMode::new(TruncationKind::ProgressiveLastK, 1).unwrap(), None, 0)
            .unwrap();
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn detector_reports_non_identity() {
        let an = scalar(Space::grid(1e-3));
        let tr = constant_transcript(&an, &[0.9; 10]);
        let r = check_identity(&an, &tr, TruncationMode::new(TruncationKind::ProgressiveLastK, 1).unwrap(), None, 7)
            .unwrap();
        assert!(!r.holds());
        let c = r.first.unwrap();
        assert_eq!((c.seed, c.t), (7, 2));
    }
}
