//! Interaction loop, experiment configs, sweeps and attack demonstrations.

pub mod attack;
pub mod config;
pub mod continuous;
pub mod session;
pub mod stats;
pub mod sweep;

pub use attack::{counterexample_demo, interleaving_demo, overfit_attack, overfit_attack_with};
pub use config::{AnalystGenerator, AnalystSource, ExperimentConfig};
pub use continuous::continuous_mode_session;
pub use session::{interact, run_session, RunResult, SessionOptions, SessionOutput};
pub use sweep::{scaling_sweep, write_sweep_csv, SweepRow};
