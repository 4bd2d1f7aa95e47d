//! Seeded Monte Carlo experiments, audits and report emission for
//! `slrgap-core`.
//!
//! Every trial draws from its own stream `SeedStream::trial(master_seed, i)`,
//! so results depend only on the configuration and master seed, never on the
//! worker count or execution order.

pub mod audits;
pub mod config;
pub mod error;
pub mod report;
pub mod trials;

pub use audits::{concentration_audit, ConcentrationRow};
pub use config::{ExperimentConfig, ExperimentKind, TruthChoice};
pub use error::{Error, Result};
pub use report::{emit_report, wilson_interval, ExperimentReport, Format, RunOutput, TrialRecord};
pub use trials::{run_experiment, run_trials};
