//! Simulation laboratory for adaptive data analysis: analysts modelled as
//! discrete-time dynamical systems, the statistical mechanisms that answer
//! their queries, privacy accounting, truncated-analyst verification and an
//! experiment harness.

pub mod analysts;
pub mod data;
pub mod error;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod mechanisms;
pub mod privacy;
pub mod query;
pub mod schedule;
pub mod seeds;
pub mod transcript;
pub mod truncation;

pub use analysts::{Analyst, AnalystClass, AnalystSpec, AnalystState, Family, Hidden, Space};
pub use data::{sample_dataset, true_mean, Dataset, Distribution, MdpModel, MeanEstimate};
pub use error::{Error, Result};
pub use grid::{lp_distance, ones_norm, quantize, GridState, Norm, Rounding};
pub use linalg::Matrix;
pub use mechanisms::{Mechanism, MechanismKind, MechanismSpec};
pub use privacy::{DepthResult, DpParams};
pub use query::{Component, Query};
pub use schedule::Schedule;
pub use transcript::{Round, Transcript};
