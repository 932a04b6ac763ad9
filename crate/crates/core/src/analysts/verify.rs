//! Randomized checks of the inequalities an analyst's declared class promises.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Analyst, AnalystClass, Hidden, Space};
use crate::data::{sample_dataset, Dataset, Distribution};
use crate::error::{invalid, Result};
use crate::grid::{lp_distance, ones_norm, quantize};
use crate::seeds::{derive_seed, Stream};

/// Answer indices sampled for time-varying classes.
const HORIZON: usize = 50;
/// Recorded violation messages are capped at this many.
const MAX_MESSAGES: usize = 10;
const FLOAT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub analyst: String,
    pub class: AnalystClass,
    pub trials: usize,
    /// Slack added to every right-hand side (0 off the grid).
    pub slack: f64,
    /// max ‖ψ(h,a) − ψ(h′,a)‖ / ‖h − h′‖ (progressive).
    pub max_state_ratio: Option<f64>,
    /// max ‖ψ_t(h,a) − ψ_t(h,a′)‖ / (‖a − a′‖ · bound_t), bound_t being `L` or `η_t`.
    pub max_answer_ratio: Option<f64>,
    /// max ‖ψ(h, q_h(S)) − ψ(h′, q_h′(S))‖ / ‖h − h′‖ (type B).
    pub max_empirical_contraction: Option<f64>,
    /// `‖A‖` for type B.
    pub state_matrix_norm: Option<f64>,
    /// max |ψ(h, a + ξ) − ψ(h, a) − Bξ| relative to the magnitudes involved (type B).
    pub max_linearity_error: Option<f64>,
    pub violation_count: usize,
    pub violations: Vec<String>,
    pub passed: bool,
}

struct Tally {
    count: usize,
    messages: Vec<String>,
}

impl Tally {
    fn record(&mut self, msg: String) {
        self.count += 1;
        if self.messages.len() < MAX_MESSAGES {
            self.messages.push(msg);
        }
    }
}

fn random_box(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-radius..=radius)).collect()
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

fn fmax(acc: Option<f64>, v: f64) -> Option<f64> {
    Some(acc.map_or(v, |a| a.max(v)))
}

/// Runs [`verify_class_with_data`] on a uniform dataset wide enough for the
/// analyst's queries.
pub fn verify_class(analyst: &Analyst, trials: usize, seed: u64) -> Result<ClassReport> {
    verify_class_with_data(analyst, trials, seed, None)
}

/// Samples random states and answers and checks the declared class:
/// state contraction and answer-Lipschitzness for progressive analysts,
/// `η_t`-Lipschitzness in the answer for type A, and for type B `‖A‖ ≤ 1`,
/// contraction under empirical answers on `data`, and exact linearity in
/// the answer. In grid mode the slack `Δ·‖𝟏_d‖` is added to each bound.
pub fn verify_class_with_data(
    analyst: &Analyst,
    trials: usize,
    seed: u64,
    data: Option<&Dataset>,
) -> Result<ClassReport> {
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Instance));
    let norm = analyst.norm();
    let (d, dq) = (analyst.dim(), analyst.query_dim());
    let space = analyst.space();
    let slack = space.resolution().map_or(0.0, |r| r * ones_norm(d, norm));
    let radius = analyst.typical_radius();
    let mut tally = Tally { count: 0, messages: Vec::new() };

    let lift = |v: Vec<f64>| -> Result<Hidden> {
        match space {
            Space::Grid { resolution, .. } => Ok(Hidden::Grid(quantize(&v, resolution)?)),
            Space::Continuous => Ok(Hidden::Real(v)),
        }
    };

    let mut report = ClassReport {
        analyst: analyst.describe(),
        class: analyst.class().clone(),
        trials,
        slack,
        max_state_ratio: None,
        max_answer_ratio: None,
        max_empirical_contraction: None,
        state_matrix_norm: None,
        max_linearity_error: None,
        violation_count: 0,
        violations: Vec::new(),
        passed: false,
    };

    match analyst.class().clone() {
        AnalystClass::Progressive { lambda, l } => {
            for trial in 0..trials {
                let t = rng.random_range(1..=HORIZON);
                let h = lift(random_box(&mut rng, d, radius))?;
                let h2 = lift(random_box(&mut rng, d, radius))?;
                let a = random_unit(&mut rng, dq);
                let dist = h.distance(&h2, norm)?;
                if dist > 0.0 {
                    let gap = analyst.step_from(t, &h, &a)?.distance(&analyst.step_from(t, &h2, &a)?, norm)?;
                    report.max_state_ratio = fmax(report.max_state_ratio, gap / dist);
                    let bound = lambda * dist + slack + FLOAT_SLACK * (1.0 + dist);
                    if gap > bound {
                        tally.record(format!("trial {trial}: state gap {gap} > {lambda}·{dist} + slack"));
                    }
                }
                if let Some(l) = l {
                    let a2 = random_unit(&mut rng, dq);
                    let da = lp_distance(&a, &a2, norm)?;
                    if da > 0.0 {
                        let gap = analyst.step_from(t, &h, &a)?.distance(&analyst.step_from(t, &h, &a2)?, norm)?;
                        if l > 0.0 {
                            report.max_answer_ratio = fmax(report.max_answer_ratio, gap / (l * da));
                        }
                        if gap > l * da + slack + FLOAT_SLACK * (1.0 + da) {
                            tally.record(format!("trial {trial}: answer gap {gap} > {l}·{da} + slack"));
                        }
                    }
                }
            }
        }
        AnalystClass::ConservativeA { schedule } => {
            for trial in 0..trials {
                let t = rng.random_range(1..=HORIZON);
                let eta = schedule.at(t);
                let h = lift(random_box(&mut rng, d, radius))?;
                let (a, a2) = (random_unit(&mut rng, dq), random_unit(&mut rng, dq));
                let da = lp_distance(&a, &a2, norm)?;
                if da == 0.0 {
                    continue;
                }
                let gap = analyst.step_from(t, &h, &a)?.distance(&analyst.step_from(t, &h, &a2)?, norm)?;
                if eta > 0.0 {
                    report.max_answer_ratio = fmax(report.max_answer_ratio, gap / (eta * da));
                }
                if gap > eta * da + slack + FLOAT_SLACK * (1.0 + da) {
                    tally.record(format!("trial {trial}, t={t}: answer gap {gap} > η_t·{da} + slack"));
                }
            }
        }
        AnalystClass::ConservativeB { lambda, .. } => {
            let (a_mat, b_mat) =
                analyst.linear_parts().ok_or_else(|| invalid("type B analysts must expose their linear parts"))?;
            let a_norm = a_mat.op_norm(norm);
            report.state_matrix_norm = Some(a_norm);
            if a_norm > 1.0 + FLOAT_SLACK {
                tally.record(format!("state matrix norm {a_norm} > 1"));
            }
            let owned;
            let data = match data {
                Some(s) => s,
                None => {
                    let probe = analyst.query_at(&vec![0.0; d]);
                    let width = probe.min_width().max(analyst.data_width_hint().unwrap_or(0)).max(1);
                    owned = sample_dataset(&Distribution::UniformBox { dim: width }, 256, seed)?;
                    &owned
                }
            };
            for trial in 0..trials {
                let t = rng.random_range(1..=HORIZON);
                let h = lift(random_box(&mut rng, d, radius))?;
                let h2 = lift(random_box(&mut rng, d, radius))?;
                let dist = h.distance(&h2, norm)?;
                let ans = analyst.query_at(&h.to_real()).empirical_mean(data)?;
                if dist > 0.0 {
                    let ans2 = analyst.query_at(&h2.to_real()).empirical_mean(data)?;
                    let gap = analyst.step_from(t, &h, &ans)?.distance(&analyst.step_from(t, &h2, &ans2)?, norm)?;
                    report.max_empirical_contraction = fmax(report.max_empirical_contraction, gap / dist);
                    if gap > lambda * dist + slack + FLOAT_SLACK * (1.0 + dist) {
                        tally.record(format!("trial {trial}: empirical-answer gap {gap} > {lambda}·{dist} + slack"));
                    }
                }
                // linearity in the answer, before re-gridding
                let hr = h.to_real();
                let xi: Vec<f64> = (0..dq).map(|_| rng.random_range(-0.5..0.5)).collect();
                let shifted: Vec<f64> = ans.iter().zip(&xi).map(|(u, v)| u + v).collect();
                let lhs = analyst.transition(t, &hr, &shifted)?;
                let base = analyst.transition(t, &hr, &ans)?;
                let bxi = b_mat.matvec(&xi);
                let scale = 1.0 + lhs.iter().chain(&base).chain(&bxi).fold(0.0f64, |m, v| m.max(v.abs()));
                let err =
                    lhs.iter().zip(&base).zip(&bxi).map(|((l, b), x)| (l - b - x).abs()).fold(0.0f64, f64::max) / scale;
                report.max_linearity_error = fmax(report.max_linearity_error, err);
                if err > FLOAT_SLACK {
                    tally.record(format!("trial {trial}: linearity error {err}"));
                }
            }
        }
    }
    report.violation_count = tally.count;
    report.violations = tally.messages;
    report.passed = tally.count == 0;
    Ok(report)
}
