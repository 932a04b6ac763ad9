//! Distributions with exact means, and datasets drawn from them.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::query::Query;
use crate::seeds::{derive_seed, Stream};

pub const DATASET_VERSION: u32 = 1;

/// A finite Markov decision process used as a data-generating process:
/// start state and action are uniform, reward is Bernoulli with the cell's
/// mean, next state follows the transition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpModel {
    pub states: usize,
    pub actions: usize,
    /// `P(i, a, j)` flattened as `(i * actions + a) * states + j`.
    pub transitions: Vec<f64>,
    /// Mean reward of cell `(i, a)` flattened as `i * actions + a`, in [0,1].
    pub rewards: Vec<f64>,
}

impl MdpModel {
    pub fn transition(&self, i: usize, a: usize, j: usize) -> f64 {
        self.transitions[(i * self.actions + a) * self.states + j]
    }

    pub fn reward(&self, i: usize, a: usize) -> f64 {
        self.rewards[i * self.actions + a]
    }

    pub fn validate(&self) -> Result<()> {
        if self.states == 0 || self.actions == 0 {
            return Err(invalid("MDP needs at least one state and one action"));
        }
        let cells = self.states * self.actions;
        if self.transitions.len() != cells * self.states {
            return Err(Error::DimensionMismatch { expected: cells * self.states, actual: self.transitions.len() });
        }
        if self.rewards.len() != cells {
            return Err(Error::DimensionMismatch { expected: cells, actual: self.rewards.len() });
        }
        for cell in 0..cells {
            let row = &self.transitions[cell * self.states..(cell + 1) * self.states];
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(invalid(format!("transition row {cell} has entries outside [0,1]")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("transition row {cell} sums to {total}")));
            }
        }
        if self.rewards.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(invalid("reward means must lie in [0,1]"));
        }
        Ok(())
    }

    pub fn random(states: usize, actions: usize, rng: &mut impl Rng) -> Self {
        let mut transitions = Vec::with_capacity(states * actions * states);
        for _ in 0..states * actions {
            let w: Vec<f64> = (0..states).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|x| x / s).collect();
            // pin the row sum to 1 up to one ulp
            let tail: f64 = row[..states - 1].iter().sum();
            row[states - 1] = (1.0 - tail).max(0.0);
            transitions.extend(row);
        }
        let rewards = (0..states * actions).map(|_| rng.random::<f64>()).collect();
        Self { states, actions, transitions, rewards }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// Independent coordinates `x_j ~ Bernoulli(p_j)`.
    BernoulliProduct { p: Vec<f64> },
    /// Uniform on `[0,1]^dim`.
    UniformBox { dim: usize },
    /// Independent `clip(N(mu, sigma^2), 0, 1)` coordinates.
    ClippedGaussian { mu: f64, sigma: f64, dim: usize },
    /// Tuples `(s1, a, r, s2)` from a finite MDP.
    Mdp(MdpModel),
}

/// One-dimensional marginal law of a data coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Bernoulli(f64),
    Uniform01,
    ClippedNormal { mu: f64, sigma: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl Distribution {
    pub fn bernoulli(p: f64) -> Self {
        Distribution::BernoulliProduct { p: vec![p] }
    }

    pub fn width(&self) -> usize {
        match self {
            Distribution::BernoulliProduct { p } => p.len(),
            Distribution::UniformBox { dim } | Distribution::ClippedGaussian { dim, .. } => *dim,
            Distribution::Mdp(_) => 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::BernoulliProduct { p } => {
                if p.is_empty() {
                    return Err(invalid("bernoulli-product needs at least one coordinate"));
                }
                if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(invalid("bernoulli probabilities must lie in [0,1]"));
                }
            }
            Distribution::UniformBox { dim } => {
                if *dim == 0 {
                    return Err(invalid("uniform-box needs dim >= 1"));
                }
            }
            Distribution::ClippedGaussian { mu, sigma, dim } => {
                if *dim == 0 || !(*sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
                    return Err(invalid("clipped-gaussian needs dim >= 1, finite mu and sigma > 0"));
                }
            }
            Distribution::Mdp(m) => m.validate()?,
        }
        Ok(())
    }

    pub fn marginal(&self, coord: usize) -> Result<Marginal> {
        if coord >= self.width() {
            return Err(invalid(format!("coordinate {coord} out of range (width {})", self.width())));
        }
        Ok(match self {
            Distribution::BernoulliProduct { p } => Marginal::Bernoulli(p[coord]),
            Distribution::UniformBox { .. } => Marginal::Uniform01,
            Distribution::ClippedGaussian { mu, sigma, .. } => Marginal::ClippedNormal { mu: *mu, sigma: *sigma },
            Distribution::Mdp(m) => {
                let cells = (m.states * m.actions) as f64;
                match coord {
                    0 => uniform_discrete(m.states),
                    1 => uniform_discrete(m.actions),
                    2 => Marginal::Bernoulli(m.rewards.iter().sum::<f64>() / cells),
                    _ => {
                        let probs = (0..m.states)
                            .map(|j| {
                                let mut acc = 0.0;
                                for i in 0..m.states {
                                    for a in 0..m.actions {
                                        acc += m.transition(i, a, j);
                                    }
                                }
                                acc / cells
                            })
                            .collect();
                        Marginal::Discrete { values: (0..m.states).map(|j| j as f64).collect(), probs }
                    }
                }
            }
        })
    }

    fn sample_into(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let width = self.width();
        let mut columns = vec![Vec::with_capacity(n); width];
        match self {
            Distribution::BernoulliProduct { p } => {
                for _ in 0..n {
                    for (col, &pj) in columns.iter_mut().zip(p) {
                        col.push(if rng.random::<f64>() < pj { 1.0 } else { 0.0 });
                    }
                }
            }
            Distribution::UniformBox { .. } => {
                for _ in 0..n {
                    for col in columns.iter_mut() {
                        col.push(rng.random::<f64>());
                    }
                }
            }
            Distribution::ClippedGaussian { mu, sigma, .. } => {
                for _ in 0..n {
                    for col in columns.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        col.push((mu + sigma * z).clamp(0.0, 1.0));
                    }
                }
            }
            Distribution::Mdp(m) => {
                for _ in 0..n {
                    let s1 = rng.random_range(0..m.states);
                    let a = rng.random_range(0..m.actions);
                    let r = if rng.random::<f64>() < m.reward(s1, a) { 1.0 } else { 0.0 };
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut s2 = m.states - 1;
                    for j in 0..m.states {
                        acc += m.transition(s1, a, j);
                        if u < acc {
                            s2 = j;
                            break;
                        }
                    }
                    columns[0].push(s1 as f64);
                    columns[1].push(a as f64);
                    columns[2].push(r);
                    columns[3].push(s2 as f64);
                }
            }
        }
        columns
    }
}

fn uniform_discrete(k: usize) -> Marginal {
    Marginal::Discrete { values: (0..k).map(|v| v as f64).collect(), probs: vec![1.0 / k as f64; k] }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl Marginal {
    /// `P(X <= theta)`.
    pub fn cdf(&self, theta: f64) -> f64 {
        match self {
            Marginal::Bernoulli(p) => {
                if theta < 0.0 {
                    0.0
                } else if theta < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Marginal::Uniform01 => theta.clamp(0.0, 1.0),
            Marginal::ClippedNormal { mu, sigma } => {
                if theta < 0.0 {
                    0.0
                } else if theta >= 1.0 {
                    1.0
                } else {
                    normal_cdf((theta - mu) / sigma)
                }
            }
            Marginal::Discrete { values, probs } => {
                values.iter().zip(probs).filter(|(v, _)| **v <= theta).map(|(_, p)| p).sum()
            }
        }
    }

    /// `E[clamp(offset + slope·X, 0, 1)]`, exact.
    pub fn expect_clamped_affine(&self, offset: f64, slope: f64) -> f64 {
        let g = |x: f64| (offset + slope * x).clamp(0.0, 1.0);
        match self {
            Marginal::Bernoulli(p) => p * g(1.0) + (1.0 - p) * g(0.0),
            Marginal::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| p * g(*v)).sum(),
            Marginal::Uniform01 => {
                let knots = affine_knots(offset, slope, 0.0, 1.0);
                integrate_pl(&g, &knots, |u, v, a, b| a * (v - u) + b * (v * v - u * u) / 2.0)
            }
            Marginal::ClippedNormal { mu, sigma } => {
                // h(y) = g(clip(y)) is piecewise linear in y; integrate against N(mu, sigma^2).
                let h = |y: f64| g(y.clamp(0.0, 1.0));
                let mut knots = affine_knots(offset, slope, 0.0, 1.0);
                knots.insert(0, f64::NEG_INFINITY);
                knots.push(f64::INFINITY);
                integrate_pl(&h, &knots, |u, v, a, b| {
                    let (zu, zv) = ((u - mu) / sigma, (v - mu) / sigma);
                    let mass = normal_cdf(zv) - normal_cdf(zu);
                    let pdf_u = if zu.is_finite() { normal_pdf(zu) } else { 0.0 };
                    let pdf_v = if zv.is_finite() { normal_pdf(zv) } else { 0.0 };
                    a * mass + b * (mu * mass - sigma * (pdf_v - pdf_u))
                })
            }
        }
    }
}

/// Sorted knots of `clamp(offset + slope·x, 0, 1)` restricted to `[lo, hi]`,
/// including the endpoints.
fn affine_knots(offset: f64, slope: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut knots = vec![lo, hi];
    if slope != 0.0 {
        for level in [0.0, 1.0] {
            let x = (level - offset) / slope;
            if x > lo && x < hi {
                knots.push(x);
            }
        }
    }
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots
}

/// Sum of `piece(u, v, a, b)` over consecutive knots, where `a + b·x` is the
/// affine restriction of `f` to `[u, v]`. Infinite end pieces are constant.
fn integrate_pl(f: &dyn Fn(f64) -> f64, knots: &[f64], piece: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
    knots
        .windows(2)
        .map(|w| {
            let (u, v) = (w[0], w[1]);
            if u == v {
                return 0.0;
            }
            let (a, b) = if u.is_infinite() {
                (f(v), 0.0)
            } else if v.is_infinite() {
                (f(u), 0.0)
            } else {
                let b = (f(v) - f(u)) / (v - u);
                (f(u) - b * u, b)
            };
            piece(u, v, a, b)
        })
        .sum()
}

/// `n` i.i.d. points, stored column-major.
#[derive(Debug, Clone)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    n: usize,
    seed: u64,
    /// Ascending copies of the columns, built on first use.
    sorted: OnceLock<Vec<Vec<f64>>>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.columns == other.columns && self.n == other.n && self.seed == other.seed
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetDoc {
    version: u32,
    seed: u64,
    n: usize,
    width: usize,
    points: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn from_points(points: &[Vec<f64>], seed: u64) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(invalid("dataset needs n >= 1"));
        }
        let width = points[0].len();
        let mut columns = vec![Vec::with_capacity(n); width];
        for p in points {
            if p.len() != width {
                return Err(Error::DimensionMismatch { expected: width, actual: p.len() });
            }
            for (i, (col, v)) in columns.iter_mut().zip(p).enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { index: i, value: *v });
                }
                col.push(*v);
            }
        }
        Ok(Self { columns, n, seed, sorted: OnceLock::new() })
    }

    /// Scalar points `x_1, …, x_n`.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let points: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Self::from_points(&points, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// Number of points with `x[j] <= theta`.
    pub fn count_at_most(&self, j: usize, theta: f64) -> usize {
        let sorted = self.sorted.get_or_init(|| {
            self.columns
                .iter()
                .map(|c| {
                    let mut v = c.clone();
                    v.sort_by(f64::total_cmp);
                    v
                })
                .collect()
        });
        sorted[j].partition_point(|&v| v <= theta)
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = DatasetDoc {
            version: DATASET_VERSION,
            seed: self.seed,
            n: self.n,
            width: self.width(),
            points: (0..self.n).map(|i| self.point(i)).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: DatasetDoc = serde_json::from_str(s)?;
        if doc.version != DATASET_VERSION {
            return Err(Error::Unsupported(format!("dataset version {}", doc.version)));
        }
        if doc.points.len() != doc.n {
            return Err(Error::DimensionMismatch { expected: doc.n, actual: doc.points.len() });
        }
        Self::from_points(&doc.points, doc.seed)
    }
}

/// `n` i.i.d. draws from `dist`, deterministic given `seed`.
pub fn sample_dataset(dist: &Distribution, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(invalid("sample_dataset needs n >= 1"));
    }
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Data));
    let columns = dist.sample_into(n, &mut rng);
    Ok(Dataset { columns, n, seed, sorted: OnceLock::new() })
}

/// Population mean of a query, with a standard error when it was estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: Vec<f64>,
    /// `None` when the value is exact.
    pub std_error: Option<Vec<f64>>,
}

impl MeanEstimate {
    pub fn is_exact(&self) -> bool {
        self.std_error.is_none()
    }
}

/// `E_{X~dist}[q(X)]`: exact when every component has a closed form under
/// `dist`, otherwise a Monte-Carlo estimate on fresh samples drawn from the
/// `seed`'s dedicated stream (independent of any dataset).
pub fn true_mean(dist: &Distribution, q: &Query, mc_budget: Option<usize>, seed: u64) -> Result<MeanEstimate> {
    if let Some(value) = q.closed_form_mean(dist)? {
        return Ok(MeanEstimate { value, std_error: None });
    }
    let budget = match mc_budget {
        Some(b) if b >= 2 => b,
        _ => return Err(Error::NoClosedForm),
    };
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::MonteCarlo));
    let fresh = Dataset { columns: dist.sample_into(budget, &mut rng), n: budget, seed, sorted: OnceLock::new() };
    let d_q = q.dim();
    let mut sum = vec![0.0; d_q];
    let mut sum_sq = vec![0.0; d_q];
    let mut buf = vec![0.0; d_q];
    for i in 0..budget {
        q.eval_into(&fresh.point(i), &mut buf);
        for j in 0..d_q {
            sum[j] += buf[j];
            sum_sq[j] += buf[j] * buf[j];
        }
    }
    let nb = budget as f64;
    let value: Vec<f64> = sum.iter().map(|s| s / nb).collect();
    let std_error =
        value.iter().zip(&sum_sq).map(|(m, s2)| ((s2 / nb - m * m).max(0.0) * nb / (nb - 1.0) / nb).sqrt()).collect();
    Ok(MeanEstimate { value, std_error: Some(std_error) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::Component;

    /// Midpoint-rule oracle for E[clamp(o + s·X, 0, 1)].
    fn quadrature(m: &Marginal, o: f64, s: f64) -> f64 {
        let g = |x: f64| (o + s * x).clamp(0.0, 1.0);
        let steps = 400_000;
        match m {
            Marginal::Uniform01 => (0..steps).map(|i| g((i as f64 + 0.5) / steps as f64)).sum::<f64>() / steps as f64,
            Marginal::ClippedNormal { mu, sigma } => {
                // atoms at 0 and 1 plus the interior density
                let p0 = normal_cdf(-mu / sigma);
                let p1 = 1.0 - normal_cdf((1.0 - mu) / sigma);
                let h = 1.0 / steps as f64;
                let interior: f64 = (0..steps)
                    .map(|i| {
                        let x = (i as f64 + 0.5) * h;
                        g(x) * normal_pdf((x - mu) / sigma) / sigma * h
                    })
                    .sum();
                p0 * g(0.0) + p1 * g(1.0) + interior
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn clamped_affine_expectation_matches_quadrature() {
        let cases = [(0.0, 1.0), (0.3, -0.8), (-0.2, 2.5), (1.2, -3.0), (0.5, 0.0), (-1.0, 0.5)];
        let laws = [
            Marginal::Uniform01,
            Marginal::ClippedNormal { mu: 0.5, sigma: 0.1 },
            Marginal::ClippedNormal { mu: 0.2, sigma: 0.7 },
        ];
        for law in &laws {
            for &(o, s) in &cases {
                let exact = law.expect_clamped_affine(o, s);
                let oracle = quadrature(law, o, s);
                assert!((exact - oracle).abs() < 1e-6, "{law:?} o={o} s={s}: {exact} vs {oracle}");
            }
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = Distribution::bernoulli(0.5);
        let a = sample_dataset(&d, 4, 7).unwrap();
        let b = sample_dataset(&d, 4, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.column(0).iter().all(|&v| v == 0.0 || v == 1.0));
        let ones = sample_dataset(&Distribution::bernoulli(1.0), 3, 99).unwrap();
        assert_eq!(ones.column(0), &[1.0, 1.0, 1.0]);
        assert!(sample_dataset(&d, 0, 1).is_err());
    }

    #[test]
    fn clipped_gaussian_sample_mean() {
        let d = Distribution::ClippedGaussian { mu: 0.5, sigma: 0.1, dim: 1 };
        let s = sample_dataset(&d, 1000, 1).unwrap();
        let mean: f64 = s.column(0).iter().sum::<f64>() / 1000.0;
        // CLT: sd of the mean is 0.1/sqrt(1000) ~ 0.0032, so 0.02 is > 6 sd
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn closed_form_means() {
        let id = Query::new(vec![Component::identity(0)]);
        let m = true_mean(&Distribution::bernoulli(0.3), &id, None, 0).unwrap();
        assert!(m.is_exact());
        assert!((m.value[0] - 0.3).abs() < 1e-15);

        let q2 = Query::new(vec![Component::identity(0), Component::identity(1)]);
        let bp = Distribution::BernoulliProduct { p: vec![0.2, 0.8] };
        let m = true_mean(&bp, &q2, None, 0).unwrap();
        assert!((m.value[0] - 0.2).abs() < 1e-15 && (m.value[1] - 0.8).abs() < 1e-15);

        let thr = Query::new(vec![Component::Threshold { coord: 0, theta: 0.25 }]);
        let m = true_mean(&Distribution::UniformBox { dim: 1 }, &thr, None, 0).unwrap();
        assert_eq!(m.value[0], 0.25);
    }

    #[test]
    fn monte_carlo_fallback_and_error() {
        let q = Query::new(vec![Component::LogisticGradient {
            weights: vec![0.5],
            features: vec![0],
            coord: 0,
            label: 1,
            positive: true,
            bound: 1.0,
        }]);
        let d = Distribution::UniformBox { dim: 2 };
        assert!(matches!(true_mean(&d, &q, None, 0), Err(Error::NoClosedForm)));
        let est = true_mean(&d, &q, Some(20_000), 3).unwrap();
        assert!(!est.is_exact());
        assert!(est.std_error.as_ref().unwrap()[0] > 0.0);
    }

    #[test]
    fn dataset_json_round_trip() {
        let d = sample_dataset(&Distribution::UniformBox { dim: 3 }, 5, 11).unwrap();
        let back = Dataset::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn mdp_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = MdpModel::random(3, 2, &mut rng);
        m.validate().unwrap();
        let mut bad = m.clone();
        bad.transitions[0] += 0.1;
        assert!(bad.validate().is_err());
    }
}
