use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Step-size schedule `η_t`, indexed from `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `η_t = eta0 / t^power`.
    Power {
        eta0: f64,
        power: f64,
    },
    /// `η_t = eta0 · rate^t`.
    Exponential {
        eta0: f64,
        rate: f64,
    },
    Constant {
        eta: f64,
    },
    /// Explicit values for `t = 1..`, zero afterwards.
    Explicit {
        values: Vec<f64>,
    },
}

impl Schedule {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Schedule::Power { eta0, power } => eta0 / (t as f64).powf(*power),
            Schedule::Exponential { eta0, rate } => eta0 * rate.powi(t as i32),
            Schedule::Constant { eta } => *eta,
            Schedule::Explicit { values } => values.get(t.wrapping_sub(1)).copied().unwrap_or(0.0),
        }
    }

    /// Checks nonnegativity and that the schedule is nonincreasing on `1..=horizon`.
    pub fn check_nonincreasing(&self, horizon: usize) -> Result<()> {
        let mut prev = self.at(1);
        if !(prev >= 0.0) || !prev.is_finite() {
            return Err(invalid(format!("step size at t=1 is {prev}")));
        }
        for t in 2..=horizon {
            let next = self.at(t);
            if !(next >= 0.0) {
                return Err(invalid(format!("step size at t={t} is {next}")));
            }
            if next > prev {
                return Err(Error::IncreasingSchedule { t, prev, next });
            }
            prev = next;
        }
        Ok(())
    }

    /// True for the schedule kinds whose limit is zero.
    pub fn decays_to_zero(&self) -> bool {
        match self {
            Schedule::Power { power, .. } => *power > 0.0,
            Schedule::Exponential { rate, .. } => rate.abs() < 1.0,
            Schedule::Constant { eta } => *eta == 0.0,
            Schedule::Explicit { .. } => true,
        }
    }
}
