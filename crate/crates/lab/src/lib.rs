//! Command-line harness around `rrdps-core`: configuration, a worker pool,
//! claim verdicts and canonical JSON/CSV output.

pub mod cli;
pub mod config;
pub mod emit;
pub mod envelope;
pub mod error;
pub mod runner;

pub use config::{Command, ExperimentConfig, Job};
pub use envelope::{Payload, ResultEnvelope, Verdict};
pub use error::{LabError, LabResult};
pub use runner::{run, RunOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CLAIM_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
