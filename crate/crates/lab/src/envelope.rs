//! Result envelope and the command-specific payloads it carries.

use std::fmt;

use rrdps_core::analysis::{ContradictionReport, ScalingReport, ScanReport};
use rrdps_core::attack1::Attack1Stats;
use rrdps_core::attack2::Attack2Stats;
use rrdps_core::protocol::HonestStats;
use rrdps_core::security::search::{RestartSummary, SearchConfig};
use rrdps_core::security::{ConstraintEntry, LeakageReport, ModelVerdict, TheoremReport};
use serde::{Deserialize, Serialize};

use crate::config::Job;

/// Bumped whenever the JSON or CSV layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// One checked claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub pass: bool,
}

impl Verdict {
    pub fn new(claim: impl Into<String>, pass: bool) -> Self {
        Verdict {
            claim: claim.into(),
            pass,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "claim: {}: {}", self.claim, if self.pass { "PASS" } else { "FAIL" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    #[serde(rename = "L")]
    pub pulses: usize,
    pub n_ph: u64,
    /// `None` when `n_ph > L - 1`, outside the original formula's domain.
    pub original: Option<f64>,
    pub improved: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweep {
    pub sweep_max: usize,
    pub checked: u64,
    /// Points where the original formula is not exactly 1/2.
    pub mismatches: u64,
    pub min_improved: f64,
    pub max_improved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseErrorReport {
    pub operating_point: Option<ContradictionReport>,
    pub point: Option<PhasePoint>,
    pub sweep: Option<PhaseSweep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemarkCheck {
    pub c: f64,
    pub bound: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scan: ScanReport,
    pub remark: Option<RemarkCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub config: SearchConfig,
    pub restarts: Vec<RestartSummary>,
    pub best: RestartSummary,
    pub converged: bool,
    pub theorem_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub verdict: ModelVerdict,
    pub residuals: Vec<ConstraintEntry>,
    pub leakage: LeakageReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixCReport {
    pub random_models: TheoremReport,
    pub search: SearchSummary,
    pub counterexample: Counterexample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "report", rename_all = "snake_case")]
pub enum Payload {
    Honest(HonestStats),
    Attack1(Attack1Stats),
    Attack2(Attack2Stats),
    PhaseError(PhaseErrorReport),
    GraphScan(ScanReport),
    CriticalScaling(ScalingReport),
    CoverageScan(CoverageReport),
    AppendixC(AppendixCReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub config: Job,
    pub version: String,
    pub schema: u32,
    pub duration_seconds: f64,
    pub payload: Payload,
    pub verdicts: Vec<Verdict>,
}

impl ResultEnvelope {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}
