//! Analysts as dynamical systems: a hidden state `h` evolves by
//! `h_t = ψ_t(h_{t−1}, a_t)` and the next query is `f(h)`.
//!
//! Indexing: `h_0 = 0`; the query of round `t` is built from `h_{t−1}` and
//! its answer `a_t` produces `h_t`. In grid mode every `h_t` lies on the
//! Δ-grid; the real-valued update is re-gridded after each step.

pub mod adversary;
pub mod bellman;
pub mod gradient;
pub mod verify;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{ones_norm, GridState, Norm, Rounding};
use crate::linalg::Matrix;
use crate::query::{Component, Query};
use crate::schedule::Schedule;

pub use bellman::MdpSpec;
pub use gradient::LossSpec;

/// Where hidden states live.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    Grid {
        resolution: f64,
        #[serde(default)]
        rounding: Rounding,
    },
    Continuous,
}

impl Space {
    pub fn grid(resolution: f64) -> Self {
        Space::Grid { resolution, rounding: Rounding::Nearest }
    }

    pub fn resolution(&self) -> Option<f64> {
        match self {
            Space::Grid { resolution, .. } => Some(*resolution),
            Space::Continuous => None,
        }
    }
}

/// A hidden state: grid-exact or real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hidden {
    Grid(GridState),
    Real(Vec<f64>),
}

impl Hidden {
    pub fn zeros(dim: usize, space: Space) -> Result<Self> {
        Ok(match space {
            Space::Grid { resolution, .. } => Hidden::Grid(GridState::zeros(dim, resolution)?),
            Space::Continuous => Hidden::Real(vec![0.0; dim]),
        })
    }

    pub fn to_real(&self) -> Vec<f64> {
        match self {
            Hidden::Grid(g) => g.to_real(),
            Hidden::Real(v) => v.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Hidden::Grid(g) => g.dim(),
            Hidden::Real(v) => v.len(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Hidden::Grid(g) => g.is_zero(),
            Hidden::Real(v) => v.iter().all(|&x| x == 0.0),
        }
    }

    /// Distance, computed on integer coordinates for two grid states.
    pub fn distance(&self, other: &Hidden, norm: Norm) -> Result<f64> {
        match (self, other) {
            (Hidden::Grid(a), Hidden::Grid(b)) => a.distance(b, norm),
            _ => crate::grid::lp_distance(&self.to_real(), &other.to_real(), norm),
        }
    }

    /// Maps a real update back into the space; `TowardState` rounding is
    /// relative to `self`.
    pub fn regrid(&self, v: Vec<f64>, space: Space) -> Result<Hidden> {
        match (self, space) {
            (Hidden::Grid(g), Space::Grid { rounding, .. }) => Ok(Hidden::Grid(g.requantize(&v, rounding)?)),
            (_, Space::Continuous) => {
                if let Some((i, &x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite()) {
                    return Err(Error::NonFinite { index: i, value: x });
                }
                Ok(Hidden::Real(v))
            }
            (Hidden::Real(_), Space::Grid { resolution, .. }) => {
                Ok(Hidden::Grid(crate::grid::quantize(&v, resolution)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalystState {
    /// Number of answers absorbed so far.
    pub t: usize,
    pub h: Hidden,
}

/// The class an analyst declares, with its constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum AnalystClass {
    /// `ψ_t(·, a)` is λ-contractive; `l` is the answer-Lipschitz constant
    /// when one is declared.
    Progressive { lambda: f64, l: Option<f64> },
    /// `ψ_t(h, ·)` is `η_t`-Lipschitz with `η_t → 0`.
    ConservativeA { schedule: Schedule },
    /// Linear, `‖A_t‖ ≤ 1`, λ-contractive under empirical answers; states
    /// stay in the radius-`radius` ball.
    ConservativeB { lambda: f64, radius: f64 },
}

/// How a linear progressive analyst turns its state into a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryMap {
    /// Ignores the state.
    Constant { components: Vec<Component> },
    /// Component `j`: `1{x[coords[j]] <= clamp(½ + gain·h[j mod d])}`.
    Threshold { coords: Vec<usize>, gain: f64 },
    /// Component `j`: `clamp(½ + gain·h[j mod d] + slope·(x[coords[j]] − ½))`.
    Affine { coords: Vec<usize>, gain: f64, slope: f64 },
}

impl QueryMap {
    pub fn dim(&self) -> usize {
        match self {
            QueryMap::Constant { components } => components.len(),
            QueryMap::Threshold { coords, .. } | QueryMap::Affine { coords, .. } => coords.len(),
        }
    }

    pub fn query(&self, h: &[f64]) -> Query {
        let hj = |j: usize| if h.is_empty() { 0.0 } else { h[j % h.len()] };
        match self {
            QueryMap::Constant { components } => Query::new(components.clone()),
            QueryMap::Threshold { coords, gain } => Query::new(
                coords
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| Component::Threshold { coord: c, theta: (0.5 + gain * hj(j)).clamp(0.0, 1.0) })
                    .collect(),
            ),
            QueryMap::Affine { coords, gain, slope } => Query::new(
                coords
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| Component::ClampedAffine {
                        coord: c,
                        offset: 0.5 + gain * hj(j) - 0.5 * slope,
                        slope: *slope,
                    })
                    .collect(),
            ),
        }
    }
}

/// Analyst families with their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `h' = A h + B a`, progressive with `λ = ‖A‖`, `L = ‖B‖`.
    Linear { a: Matrix, b: Matrix, queries: QueryMap },
    /// `h' = tanh(W h + U a)`, progressive with `λ = ‖W‖`, `L = ‖U‖`.
    StableRnn { w: Matrix, u: Matrix, queries: QueryMap },
    /// Value iteration on estimated rewards; γ-contractive in ℓ∞.
    Bellman { mdp: MdpSpec },
    /// Gradient descent whose answer-Lipschitz constant is `schedule(t)`:
    /// the gradient step is `schedule(t) / ‖M‖` with `M` the decoding map.
    GradientA { loss: LossSpec, schedule: Schedule, bound: f64 },
    /// Constant-step gradient descent with an optional ℓ2 regularizer.
    GradientB {
        loss: LossSpec,
        eta: f64,
        bound: f64,
        #[serde(default)]
        reg: f64,
        radius: f64,
    },
    /// `h' = A h + B a` with query component `j` equal to
    /// `clamp(offsets[j] − (G h)_j + weight·(x[coords[j]] − ½))`.
    LinearB {
        a: Matrix,
        b: Matrix,
        gain: Matrix,
        offsets: Vec<f64>,
        coords: Vec<usize>,
        weight: f64,
        lambda: f64,
        radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalystSpec {
    #[serde(flatten)]
    pub family: Family,
    pub space: Space,
    #[serde(default)]
    pub norm: Norm,
}

/// A validated analyst.
#[derive(Debug, Clone, PartialEq)]
pub struct Analyst {
    spec: AnalystSpec,
    class: AnalystClass,
    dim: usize,
    query_dim: usize,
}

fn tanh_vec(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(f64::tanh).collect()
}

fn check_shape(m: &Matrix, rows: usize, cols: usize, name: &str) -> Result<()> {
    if m.rows() != rows || m.cols() != cols {
        return Err(invalid(format!("{name} must be {rows}x{cols}, got {}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

impl Analyst {
    pub fn new(spec: AnalystSpec) -> Result<Self> {
        if let Space::Grid { resolution, .. } = spec.space {
            if !(resolution > 0.0 && resolution.is_finite()) {
                return Err(invalid(format!("grid resolution must be > 0, got {resolution}")));
            }
        }
        let norm = spec.norm;
        let (class, dim, query_dim) = match &spec.family {
            Family::Linear { a, b, queries } | Family::StableRnn { w: a, u: b, queries } => {
                let d = a.rows();
                check_shape(a, d, d, "state matrix")?;
                check_shape(b, d, queries.dim(), "answer matrix")?;
                let lambda = a.op_norm(norm);
                if lambda > 1.0 + 1e-12 {
                    return Err(invalid(format!("state matrix has operator norm {lambda} > 1")));
                }
                (AnalystClass::Progressive { lambda: lambda.min(1.0), l: Some(b.op_norm(norm)) }, d, queries.dim())
            }
            Family::Bellman { mdp } => {
                mdp.validate()?;
                if norm != Norm::Linf {
                    return Err(invalid("value iteration contracts in the l-infinity norm; set norm to linf"));
                }
                let cells = mdp.states() * mdp.actions();
                (AnalystClass::Progressive { lambda: mdp.gamma, l: None }, mdp.states(), 2 * cells)
            }
            Family::GradientA { loss, schedule, bound } => {
                loss.validate()?;
                if !(*bound > 0.0) {
                    return Err(invalid("gradient bound must be > 0"));
                }
                schedule.check_nonincreasing(1000)?;
                if !schedule.decays_to_zero() {
                    return Err(invalid("type A schedules must decay to zero"));
                }
                (AnalystClass::ConservativeA { schedule: schedule.clone() }, loss.dim(), 2 * loss.dim())
            }
            Family::GradientB { loss, eta, bound, reg, radius } => {
                loss.validate()?;
                if !(*bound > 0.0 && *radius > 0.0 && *reg >= 0.0) {
                    return Err(invalid("gradient bound and radius must be > 0, reg >= 0"));
                }
                let lambda = gradient::gd_contraction(*eta, loss.beta() + reg, loss.mu() + reg)?;
                if eta * reg > 2.0 {
                    return Err(invalid("regularized state map has operator norm > 1"));
                }
                (AnalystClass::ConservativeB { lambda, radius: *radius }, loss.dim(), 2 * loss.dim())
            }
            Family::LinearB { a, b, gain, offsets, coords, lambda, radius, .. } => {
                let d = a.rows();
                let dq = coords.len();
                check_shape(a, d, d, "state matrix")?;
                check_shape(b, d, dq, "answer matrix")?;
                check_shape(gain, dq, d, "query gain")?;
                if offsets.len() != dq {
                    return Err(Error::DimensionMismatch { expected: dq, actual: offsets.len() });
                }
                if a.op_norm(norm) > 1.0 + 1e-12 {
                    return Err(invalid("type B analysts need ‖A‖ <= 1"));
                }
                if !(0.0..=1.0).contains(lambda) || !(*radius > 0.0) {
                    return Err(invalid("type B analysts need lambda in [0,1] and radius > 0"));
                }
                (AnalystClass::ConservativeB { lambda: *lambda, radius: *radius }, d, dq)
            }
        };
        Ok(Self { spec, class, dim, query_dim })
    }

    pub fn spec(&self) -> &AnalystSpec {
        &self.spec
    }

    pub fn class(&self) -> &AnalystClass {
        &self.class
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn query_dim(&self) -> usize {
        self.query_dim
    }

    pub fn space(&self) -> Space {
        self.spec.space
    }

    pub fn norm(&self) -> Norm {
        self.spec.norm
    }

    /// `C_𝟏` for this analyst's query dimension and norm.
    pub fn c1(&self) -> f64 {
        ones_norm(self.query_dim, self.spec.norm)
    }

    pub fn describe(&self) -> String {
        let family = match &self.spec.family {
            Family::Linear { .. } => "linear",
            Family::StableRnn { .. } => "stable_rnn",
            Family::Bellman { .. } => "bellman",
            Family::GradientA { .. } => "gradient_a",
            Family::GradientB { .. } => "gradient_b",
            Family::LinearB { .. } => "linear_b",
        };
        format!("{family}(d={}, d_q={}, {:?})", self.dim, self.query_dim, self.class)
    }

    /// Data width the analyst's queries read, when fixed by the family.
    pub fn data_width_hint(&self) -> Option<usize> {
        match &self.spec.family {
            Family::Bellman { .. } => Some(4),
            Family::GradientA { loss, .. } | Family::GradientB { loss, .. } => Some(loss.data_width()),
            _ => None,
        }
    }

    pub fn initial(&self) -> Result<AnalystState> {
        Ok(AnalystState { t: 0, h: Hidden::zeros(self.dim, self.spec.space)? })
    }

    /// `(A_t, B_t)` for the linear families.
    pub fn linear_parts(&self) -> Option<(Matrix, Matrix)> {
        match &self.spec.family {
            Family::Linear { a, b, .. } | Family::LinearB { a, b, .. } => Some((a.clone(), b.clone())),
            Family::GradientB { loss, eta, bound, reg, .. } => {
                let d = loss.dim();
                let a = Matrix::identity(d).scaled(1.0 - eta * reg);
                let b = gradient::decoding_matrix(d, *bound).scaled(-eta);
                Some((a, b))
            }
            _ => None,
        }
    }

    /// The real-valued map `ψ_t(h, a)` before re-gridding; `t` is the index
    /// of the answer being absorbed.
    pub fn transition(&self, t: usize, h: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: h.len() });
        }
        if a.len() != self.query_dim {
            return Err(Error::DimensionMismatch { expected: self.query_dim, actual: a.len() });
        }
        Ok(match &self.spec.family {
            Family::Linear { a: am, b, .. } | Family::LinearB { a: am, b, .. } => {
                let x = am.matvec(h);
                let y = b.matvec(a);
                x.iter().zip(&y).map(|(u, v)| u + v).collect()
            }
            Family::StableRnn { w, u, .. } => {
                let x = w.matvec(h);
                let y = u.matvec(a);
                tanh_vec(x.iter().zip(&y).map(|(p, q)| p + q).collect())
            }
            Family::Bellman { mdp } => bellman::bellman_step(h, &bellman::rewards_from_answer(a), mdp)?,
            Family::GradientA { schedule, bound, .. } => {
                let g = gradient::decode_gradient(a, *bound);
                let eta = schedule.at(t) / gradient::decoding_norm(*bound, self.spec.norm);
                h.iter().zip(&g).map(|(x, gj)| x - eta * gj).collect()
            }
            Family::GradientB { loss, eta, bound, reg, .. } => {
                let g = gradient::decode_gradient(a, *bound);
                gradient::gd_step_b(h, &g, *eta, loss, *reg)?.0
            }
        })
    }

    /// `f(h)`: the query issued from state `h` in round `t + 1`.
    pub fn query_at(&self, h: &[f64]) -> Query {
        match &self.spec.family {
            Family::Linear { queries, .. } | Family::StableRnn { queries, .. } => queries.query(h),
            Family::Bellman { mdp } => bellman::cell_query(mdp),
            Family::GradientA { loss, bound, .. } | Family::GradientB { loss, bound, .. } => {
                loss.gradient_query(h, *bound)
            }
            Family::LinearB { gain, offsets, coords, weight, .. } => {
                let gh = gain.matvec(h);
                Query::new(
                    coords
                        .iter()
                        .enumerate()
                        .map(|(j, &c)| Component::ClampedAffine {
                            coord: c,
                            offset: offsets[j] - gh[j] - 0.5 * weight,
                            slope: *weight,
                        })
                        .collect(),
                )
            }
        }
    }

    pub fn query(&self, state: &AnalystState) -> Query {
        self.query_at(&state.h.to_real())
    }

    /// One step: `ψ_{t+1}` then re-gridding; increments `t`.
    pub fn step(&self, state: &AnalystState, a: &[f64]) -> Result<AnalystState> {
        let t = state.t + 1;
        let x = self.transition(t, &state.h.to_real(), a)?;
        Ok(AnalystState { t, h: state.h.regrid(x, self.spec.space)? })
    }

    /// Step from an arbitrary state at answer index `t`.
    pub fn step_from(&self, t: usize, h: &Hidden, a: &[f64]) -> Result<Hidden> {
        let x = self.transition(t, &h.to_real(), a)?;
        h.regrid(x, self.spec.space)
    }

    /// Answer-Lipschitz constant of `ψ_t` when declared.
    pub fn answer_lipschitz(&self, t: usize) -> Option<f64> {
        match &self.class {
            AnalystClass::Progressive { l, .. } => *l,
            AnalystClass::ConservativeA { schedule } => Some(schedule.at(t)),
            AnalystClass::ConservativeB { .. } => self.linear_parts().map(|(_, b)| b.op_norm(self.spec.norm)),
        }
    }

    /// Radius of the box random states are drawn from in class checks.
    pub fn typical_radius(&self) -> f64 {
        match (&self.spec.family, &self.class) {
            (Family::Bellman { mdp }, _) => 1.0 / (1.0 - mdp.gamma),
            (Family::GradientA { .. }, _) | (Family::GradientB { .. }, _) => 1.0,
            (_, AnalystClass::Progressive { lambda, l }) => {
                let l = l.unwrap_or(1.0).max(1e-3);
                if *lambda < 1.0 {
                    l * self.c1() / (1.0 - lambda)
                } else {
                    l * self.c1()
                }
            }
            (_, AnalystClass::ConservativeB { radius, .. }) => *radius / (self.dim as f64).sqrt(),
            _ => 1.0,
        }
    }
}

/// Gaussian matrix rescaled to operator norm exactly `target` (0 allowed).
pub fn random_matrix_with_norm(rows: usize, cols: usize, target: f64, norm: Norm, rng: &mut impl Rng) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    let m = Matrix::new(rows, cols, data).expect("finite gaussian entries");
    let n = m.op_norm(norm);
    if n == 0.0 {
        return Matrix::zeros(rows, cols);
    }
    m.scaled(target / n)
}

/// A random linear progressive analyst with `‖A‖ = lambda` and `‖B‖ = l`,
/// issuing threshold queries on data coordinates `0..width`.
pub fn random_linear_progressive(
    d: usize,
    d_q: usize,
    lambda: f64,
    l: f64,
    width: usize,
    space: Space,
    norm: Norm,
    rng: &mut impl Rng,
) -> Result<Analyst> {
    let a = random_matrix_with_norm(d, d, lambda, norm, rng);
    let b = random_matrix_with_norm(d, d_q, l, norm, rng);
    let coords = (0..d_q).map(|j| j % width.max(1)).collect();
    let gain = rng.random_range(0.1..0.5);
    Analyst::new(AnalystSpec {
        family: Family::Linear { a, b, queries: QueryMap::Threshold { coords, gain } },
        space,
        norm,
    })
}

/// A random diagonal type B analyst with declared contraction `lambda` and
/// radius `radius`. Coordinate `j` of `ψ(h, q_h(S))` is
/// `(1−c)h_j + b·clamp(o_j − κ_j h_j + w(x̄ − ½))` with `1 − c = λ` and
/// `b κ_j = λ/2`, so its slope in `h_j` lies in `[λ/2, λ]` whether or not the
/// clamp is active. Data coordinates `0..width` are read.
pub fn random_linear_b(
    d: usize,
    lambda: f64,
    radius: f64,
    width: usize,
    space: Space,
    norm: Norm,
    rng: &mut impl Rng,
) -> Result<Analyst> {
    let kappa: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..0.3)).collect();
    let b: Vec<f64> = kappa.iter().map(|k| lambda / (2.0 * k)).collect();
    let offsets = (0..d).map(|_| rng.random_range(0.6..0.95)).collect();
    let coords = (0..d).map(|j| j % width.max(1)).collect();
    Analyst::new(AnalystSpec {
        family: Family::LinearB {
            a: Matrix::identity(d).scaled(lambda),
            b: Matrix::diag(&b),
            gain: Matrix::diag(&kappa),
            offsets,
            coords,
            weight: rng.random_range(0.0..0.2),
            lambda,
            radius,
        },
        space,
        norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_linear(space: Space) -> Analyst {
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

    #[test]
    fn scalar_linear_steps() {
        let an = scalar_linear(Space::Continuous);
        let s0 = an.initial().unwrap();
        let s1 = an.step(&s0, &[0.5]).unwrap();
        assert_eq!(s1.h.to_real(), vec![0.5]);
        assert_eq!(s1.t, 1);
        let g = scalar_linear(Space::grid(1e-6));
        let h = Hidden::Grid(crate::grid::quantize(&[0.5], 1e-6).unwrap());
        let next = g.step(&AnalystState { t: 1, h }, &[0.5]).unwrap();
        assert!((next.h.to_real()[0] - 0.75).abs() < 1e-15);
        assert!(an.step(&s0, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn zero_state_zero_answer_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut analysts = vec![
            random_linear_progressive(4, 2, 0.6, 1.0, 2, Space::grid(1e-3), Norm::L2, &mut rng).unwrap(),
            random_linear_b(3, 0.4, 10.0, 3, Space::grid(1e-3), Norm::L2, &mut rng).unwrap(),
        ];
        let w = random_matrix_with_norm(3, 3, 0.7, Norm::L2, &mut rng);
        let u = random_matrix_with_norm(3, 2, 1.0, Norm::L2, &mut rng);
        analysts.push(
            Analyst::new(AnalystSpec {
                family: Family::StableRnn { w, u, queries: QueryMap::Threshold { coords: vec![0, 1], gain: 0.3 } },
                space: Space::grid(1e-3),
                norm: Norm::L2,
            })
            .unwrap(),
        );
        analysts.push(
            Analyst::new(AnalystSpec {
                family: Family::Bellman {
                    mdp: MdpSpec { model: crate::data::MdpModel::random(3, 2, &mut rng), gamma: 0.9 },
                },
                space: Space::grid(1e-3),
                norm: Norm::Linf,
            })
            .unwrap(),
        );
        analysts.push(
            Analyst::new(AnalystSpec {
                family: Family::GradientA {
                    loss: LossSpec::Quadratic { dim: 2 },
                    schedule: Schedule::Exponential { eta0: 1.0, rate: 0.5 },
                    bound: 2.0,
                },
                space: Space::Grid { resolution: 1e-2, rounding: Rounding::TowardState },
                norm: Norm::L2,
            })
            .unwrap(),
        );
        analysts.push(
            Analyst::new(AnalystSpec {
                family: Family::GradientB {
                    loss: LossSpec::Quadratic { dim: 2 },
                    eta: 0.5,
                    bound: 2.0,
                    reg: 0.0,
                    radius: 10.0,
                },
                space: Space::grid(1e-3),
                norm: Norm::L2,
            })
            .unwrap(),
        );
        for an in &analysts {
            let s0 = an.initial().unwrap();
            let s1 = an.step(&s0, &vec![0.0; an.query_dim()]).unwrap();
            assert!(s1.h.is_zero(), "{}", an.describe());
        }
    }

    #[test]
    fn equal_states_give_equal_query_ids() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let an = random_linear_progressive(3, 2, 0.5, 1.0, 2, Space::grid(1e-3), Norm::L2, &mut rng).unwrap();
        for _ in 0..1000 {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let h1 = Hidden::Grid(crate::grid::quantize(&v, 1e-3).unwrap());
            let h2 = Hidden::Grid(
                GridState::from_coords(
                    match &h1 {
                        Hidden::Grid(g) => g.coords().to_vec(),
                        _ => unreachable!(),
                    },
                    1e-3,
                )
                .unwrap(),
            );
            let s1 = AnalystState { t: 5, h: h1 };
            let s2 = AnalystState { t: 5, h: h2 };
            assert_eq!(an.query(&s1).id(), an.query(&s2).id());
        }
    }

    #[test]
    fn declared_classes() {
        let an = scalar_linear(Space::Continuous);
        assert_eq!(an.class(), &AnalystClass::Progressive { lambda: 0.5, l: Some(1.0) });
        let gb = Analyst::new(AnalystSpec {
            family: Family::GradientB {
                loss: LossSpec::Quadratic { dim: 1 },
                eta: 0.5,
                bound: 2.0,
                reg: 0.0,
                radius: 5.0,
            },
            space: Space::Continuous,
            norm: Norm::L2,
        })
        .unwrap();
        assert_eq!(gb.class(), &AnalystClass::ConservativeB { lambda: 0.75, radius: 5.0 });
        let bad = Analyst::new(AnalystSpec {
            family: Family::Linear {
                a: Matrix::scalar(1.5),
                b: Matrix::scalar(1.0),
                queries: QueryMap::Constant { components: vec![Component::identity(0)] },
            },
            space: Space::Continuous,
            norm: Norm::L2,
        });
        assert!(bad.is_err());
    }
}
