//! Grid-quantized hidden states and the ℓ_p norms used for contraction
//! statements.
//!
//! A [`GridState`] stores integer coordinates `k_i` together with the
//! resolution `Δ`; the point it represents is `(k_1·Δ, …, k_d·Δ)`. Equality
//! is integer equality, so two states compare equal exactly when they are the
//! same grid point.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest integer coordinate we accept; beyond this `k·Δ` loses exactness.
const MAX_GRID_INDEX: f64 = 9.007_199_254_740_992e15; // 2^53

/// Choice of ℓ_p norm for contraction statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    #[default]
    L2,
    Linf,
}

impl Norm {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "l1" => Ok(Norm::L1),
            "2" | "l2" => Ok(Norm::L2),
            "inf" | "linf" | "∞" => Ok(Norm::Linf),
            other => Err(invalid(format!("unknown norm '{other}' (expected 1, 2 or inf)"))),
        }
    }

    /// Order of the norm as a float, `f64::INFINITY` for ℓ_∞.
    pub fn order(self) -> f64 {
        match self {
            Norm::L1 => 1.0,
            Norm::L2 => 2.0,
            Norm::Linf => f64::INFINITY,
        }
    }

    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    fn of_ints(self, v: impl Iterator<Item = i64>) -> f64 {
        match self {
            Norm::L1 => v.map(|x| x.unsigned_abs() as f64).sum(),
            Norm::L2 => {
                // Exact in i128 for any realistic grid, then one rounding.
                let s: i128 = v.map(|x| (x as i128) * (x as i128)).sum();
                (s as f64).sqrt()
            }
            Norm::Linf => v.map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64,
        }
    }
}

/// C_𝟏: the norm of the all-ones vector in dimension `d_q`.
pub fn ones_norm(d_q: usize, norm: Norm) -> f64 {
    match norm {
        Norm::L1 => d_q as f64,
        Norm::L2 => (d_q as f64).sqrt(),
        Norm::Linf => 1.0,
    }
}

/// How a real-valued update is mapped back onto the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Nearest grid point, ties to even.
    #[default]
    Nearest,
    /// Fixed-point accumulator: the increment relative to the current state
    /// is truncated toward zero, so sub-resolution updates are dropped.
    TowardState,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridState {
    coords: Vec<i64>,
    resolution: f64,
}

impl PartialEq for GridState {
    fn eq(&self, other: &Self) -> bool {
        self.resolution.to_bits() == other.resolution.to_bits() && self.coords == other.coords
    }
}

impl Eq for GridState {}

impl std::hash::Hash for GridState {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.resolution.to_bits().hash(state);
        self.coords.hash(state);
    }
}

impl GridState {
    pub fn zeros(dim: usize, resolution: f64) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(Self { coords: vec![0; dim], resolution })
    }

    pub fn from_coords(coords: Vec<i64>, resolution: f64) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(Self { coords, resolution })
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&k| k == 0)
    }

    /// The represented real point `k_i·Δ`.
    pub fn to_real(&self) -> Vec<f64> {
        self.coords.iter().map(|&k| k as f64 * self.resolution).collect()
    }

    pub fn distance(&self, other: &GridState, norm: Norm) -> Result<f64> {
        if self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch(self.resolution, other.resolution));
        }
        check_dims(self.dim(), other.dim())?;
        let diffs = self.coords.iter().zip(&other.coords).map(|(a, b)| a - b);
        Ok(norm.of_ints(diffs) * self.resolution)
    }

    /// Re-grid a real vector relative to this state.
    pub fn requantize(&self, v: &[f64], rounding: Rounding) -> Result<GridState> {
        check_dims(self.dim(), v.len())?;
        match rounding {
            Rounding::Nearest => quantize(v, self.resolution),
            Rounding::TowardState => {
                let mut coords = Vec::with_capacity(v.len());
                for (i, (&x, &k)) in v.iter().zip(&self.coords).enumerate() {
                    if !x.is_finite() {
                        return Err(Error::NonFinite { index: i, value: x });
                    }
                    let step = (x / self.resolution - k as f64).trunc();
                    let next = k as f64 + step;
                    if next.abs() >= MAX_GRID_INDEX {
                        return Err(Error::PrecisionExhausted(format!("grid index {next} exceeds 2^53")));
                    }
                    coords.push(next as i64);
                }
                Ok(GridState { coords, resolution: self.resolution })
            }
        }
    }
}

fn check_resolution(resolution: f64) -> Result<()> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(invalid(format!("grid resolution must be positive and finite, got {resolution}")));
    }
    Ok(())
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Nearest grid point of resolution `Δ`, coordinate-wise, ties to even.
pub fn quantize(v: &[f64], resolution: f64) -> Result<GridState> {
    check_resolution(resolution)?;
    let mut coords = Vec::with_capacity(v.len());
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite { index: i, value: x });
        }
        let k = (x / resolution).round_ties_even();
        if k.abs() >= MAX_GRID_INDEX {
            return Err(Error::PrecisionExhausted(format!("grid index {k} exceeds 2^53")));
        }
        coords.push(k as i64);
    }
    Ok(GridState { coords, resolution })
}

/// ℓ_p distance between two real vectors.
pub fn lp_distance(x: &[f64], y: &[f64], norm: Norm) -> Result<f64> {
    check_dims(x.len(), y.len())?;
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(norm.of(&diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(&[0.237], 0.1).unwrap().coords(), &[2]);
        assert_eq!(quantize(&[0.25], 0.1).unwrap().coords(), &[2]);
        assert_eq!(quantize(&[-0.05], 0.1).unwrap().coords(), &[0]);
        // exact half-steps on a dyadic grid go to the even index
        assert_eq!(quantize(&[0.375, 0.125, -0.375], 0.25).unwrap().coords(), &[2, 0, -2]);
    }

    #[test]
    fn quantize_rejects_non_finite() {
        assert!(matches!(quantize(&[0.0, f64::NAN], 0.1), Err(Error::NonFinite { index: 1, .. })));
        assert!(quantize(&[f64::INFINITY], 0.1).is_err());
        assert!(quantize(&[0.1], 0.0).is_err());
        assert!(quantize(&[0.1], -1.0).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(lp_distance(&[0.0, 0.0], &[3.0, 4.0], Norm::L2).unwrap(), 5.0);
        for n in [Norm::L1, Norm::L2, Norm::Linf] {
            assert_eq!(lp_distance(&[1.0, 1.0], &[1.0, 1.0], n).unwrap(), 0.0);
        }
        assert_eq!(lp_distance(&[0.0; 3], &[1.0; 3], Norm::Linf).unwrap(), 1.0);
        assert!(matches!(lp_distance(&[0.0], &[0.0, 1.0], Norm::L2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn grid_distance_is_exact_on_integers() {
        let a = GridState::from_coords(vec![0, 0], 0.5).unwrap();
        let b = GridState::from_coords(vec![3, 4], 0.5).unwrap();
        assert_eq!(a.distance(&b, Norm::L2).unwrap(), 2.5);
        assert_eq!(a.distance(&b, Norm::L1).unwrap(), 3.5);
        assert_eq!(a.distance(&b, Norm::Linf).unwrap(), 2.0);
        let c = GridState::from_coords(vec![0, 0], 0.25).unwrap();
        assert!(a.distance(&c, Norm::L2).is_err());
    }

    #[test]
    fn ones_norm_examples() {
        assert_eq!(ones_norm(4, Norm::L2), 2.0);
        assert_eq!(ones_norm(9, Norm::L1), 9.0);
        assert_eq!(ones_norm(5, Norm::Linf), 1.0);
    }

    #[test]
    fn toward_state_drops_sub_resolution_updates() {
        let h = GridState::from_coords(vec![10, -3], 0.01).unwrap();
        let same = h.requantize(&[0.1 + 0.0099, -0.03 - 0.0099], Rounding::TowardState).unwrap();
        assert_eq!(same, h);
        let moved = h.requantize(&[0.1 + 0.025, -0.03 - 0.011], Rounding::TowardState).unwrap();
        assert_eq!(moved.coords(), &[12, -4]);
    }

    #[test]
    fn norm_parse() {
        assert_eq!(Norm::parse("inf").unwrap(), Norm::Linf);
        assert_eq!(Norm::parse("1").unwrap(), Norm::L1);
        assert!(Norm::parse("3").is_err());
    }

    proptest! {
        #[test]
        fn grid_separation(a in prop::collection::vec(-50i64..50, 3),
                           b in prop::collection::vec(-50i64..50, 3),
                           delta in 1e-4f64..10.0) {
            let x = GridState::from_coords(a.clone(), delta).unwrap();
            let y = GridState::from_coords(b.clone(), delta).unwrap();
            for n in [Norm::L1, Norm::L2, Norm::Linf] {
                let dist = x.distance(&y, n).unwrap();
                if a != b {
                    prop_assert!(dist >= delta);
                } else {
                    prop_assert_eq!(dist, 0.0);
                }
            }
        }

        #[test]
        fn quantize_idempotent_and_bounded(v in prop::collection::vec(-1e3f64..1e3, 1..6),
                                           delta in 1e-3f64..2.0) {
            let q = quantize(&v, delta).unwrap();
            let again = quantize(&q.to_real(), delta).unwrap();
            prop_assert_eq!(&again, &q);
            for (r, x) in q.to_real().iter().zip(&v) {
                // k·Δ is one rounding away from the exact multiple
                prop_assert!((r - x).abs() <= delta / 2.0 * (1.0 + 1e-9) + 1e-12 * x.abs());
            }
        }

        #[test]
        fn ones_norm_nonincreasing_in_p(d in 1usize..500) {
            prop_assert!(ones_norm(d, Norm::L1) >= ones_norm(d, Norm::L2));
            prop_assert!(ones_norm(d, Norm::L2) >= ones_norm(d, Norm::Linf));
        }
    }
}
