//! Dispatch from a validated job to the simulation code.
//!
//! Every randomized quantity is indexed by a round or trial number and drawn
//! from its own counter-based stream, so the worker pool only decides *when*
//! an item is computed, never *what* it is. Results are collected in index
//! order, which makes the payload independent of the thread count.

use std::time::Instant;

use rayon::prelude::*;
use rrdps_core::analysis::{
    component_trial, contradiction_report, coverage_trial, critical_edge_count, remark_upper_bound, scaling_seed,
    PhaseErrorParams, ScalingReport, ScanParams, ScanReport, CLAIM_CONFIDENCE,
};
use rrdps_core::analysis::{phase_error_improved, phase_error_original, IMPROVED_ASYMPTOTE};
use rrdps_core::attack1::{Attack1Session, Attack1Stats};
use rrdps_core::attack2::{attack2_round, Attack2Stats};
use rrdps_core::graph::EdgeModel;
use rrdps_core::protocol::{honest_session_round, DetectionRecord, HonestStats};
use rrdps_core::security::search::{search_restart, SearchReport};
use rrdps_core::security::{
    check_constraints, eve_leakage, judge, theorem_trial, AttackModel, TheoremReport, FEASIBLE_RESIDUAL,
    LEAKAGE_TOLERANCE,
};

use crate::config::{ExperimentConfig, Job};
use crate::emit::{cell, format_f64, Table};
use crate::envelope::{
    AppendixCReport, Counterexample, CoverageReport, Payload, PhaseErrorReport, PhasePoint, PhaseSweep, RemarkCheck,
    ResultEnvelope, SearchSummary, Verdict, SCHEMA_VERSION,
};
use crate::error::{LabError, LabResult};

/// Tolerance on the statistical claims of the attack sessions.
pub const RATE_TOLERANCE: f64 = 0.01;
/// Allowed distance of the improved formula from its large-train limit.
pub const ASYMPTOTE_TOLERANCE: f64 = 1e-3;
/// Allowed distance of the fitted critical exponent from 2/3.
pub const EXPONENT_TOLERANCE: f64 = 0.1;
/// Slack on the coverage bound for finite trial counts.
pub const REMARK_SLACK: f64 = 0.01;

/// What a run produces: the envelope plus the per-sample table for CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub envelope: ResultEnvelope,
    pub table: Table,
}

struct Computed {
    payload: Payload,
    verdicts: Vec<Verdict>,
    table: Table,
}

fn sim(command: &'static str) -> impl Fn(rrdps_core::Error) -> LabError {
    move |source| LabError::Simulation { command, source }
}

/// Items `0..count`, computed in parallel and returned in index order.
fn indexed<T, F>(count: u64, f: F) -> rrdps_core::Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> rrdps_core::Result<T> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

fn lower_bound_claim(claim: String, scan: &ScanReport) -> Option<Verdict> {
    scan.summary
        .success_lower_bound
        .map(|lb| Verdict::new(claim, lb >= CLAIM_CONFIDENCE))
}

fn bit(b: Option<u8>) -> String {
    cell(b)
}

fn pair_cells(d: &DetectionRecord) -> [String; 3] {
    match *d {
        DetectionRecord::Detected { i, j, parity } => [i.to_string(), j.to_string(), parity.to_string()],
        DetectionRecord::Lost => Default::default(),
    }
}

/// Runs `cfg` on a pool of `cfg.threads` workers.
pub fn run(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| LabError::key("threads", e))?;
    let start = Instant::now();
    let computed = pool.install(|| compute(&cfg.job))?;
    let envelope = ResultEnvelope {
        config: cfg.job.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        schema: SCHEMA_VERSION,
        duration_seconds: start.elapsed().as_secs_f64(),
        payload: computed.payload,
        verdicts: computed.verdicts,
    };
    Ok(RunOutput {
        envelope,
        table: computed.table,
    })
}

fn compute(job: &Job) -> LabResult<Computed> {
    let err = sim(job.command_name());
    match *job {
        Job::Honest { pulses, rounds, seed } => {
            let records = indexed(rounds, |k| honest_session_round(pulses, seed, k)).map_err(&err)?;
            let stats = HonestStats::from_rounds(pulses, &records);
            let mut table = Table::new(&["round", "key", "delay", "i", "j", "bob_bit", "alice_bit"]);
            for (k, r) in records.iter().enumerate() {
                let key: String = r.key_bits.as_slice().iter().map(|b| char::from(b'0' + b)).collect();
                let [i, j, parity] = pair_cells(&r.detection);
                table.push(vec![
                    k.to_string(),
                    key,
                    r.delay.to_string(),
                    i,
                    j,
                    parity,
                    bit(r.alice_sifted),
                ]);
            }
            let verdicts = vec![Verdict::new("honest QBER = 0", stats.errors == 0)];
            Ok(Computed {
                payload: Payload::Honest(stats),
                verdicts,
                table,
            })
        }
        Job::Attack1 {
            n,
            rounds,
            policy,
            seed,
        } => {
            let session = Attack1Session::prepare(n, seed).map_err(&err)?;
            let records = indexed(rounds, |k| session.round(policy, k)).map_err(&err)?;
            let stats = Attack1Stats::from_rounds(&session, policy, &records);
            let mut table = Table::new(&["round", "delay", "i", "j", "bob_bit", "alice_bit", "eve_bit"]);
            for (k, r) in records.iter().enumerate() {
                let [i, j, parity] = pair_cells(&r.detection);
                table.push(vec![
                    k.to_string(),
                    r.delay.to_string(),
                    i,
                    j,
                    parity,
                    bit(r.alice_bit),
                    bit(r.eve_bit),
                ]);
            }
            let verdicts = vec![
                Verdict::new("announced-round QBER = 0", stats.errors == 0),
                Verdict::new(
                    "Eve holds every announced sifted bit",
                    stats.announced > 0 && stats.eve_correct == stats.announced,
                ),
            ];
            Ok(Computed {
                payload: Payload::Attack1(stats),
                verdicts,
                table,
            })
        }
        Job::Attack2 {
            pulses,
            rounds,
            mix_prob,
            seed,
        } => {
            let records = indexed(rounds, |k| attack2_round(pulses, mix_prob, seed, k)).map_err(&err)?;
            let stats = Attack2Stats::from_rounds(pulses, mix_prob, &records);
            let mut table = Table::new(&[
                "round",
                "delay",
                "attacked",
                "paired",
                "i",
                "j",
                "bob_bit",
                "alice_bit",
                "eve_bit",
            ]);
            for (k, r) in records.iter().enumerate() {
                let [i, j, parity] = pair_cells(&r.detection);
                table.push(vec![
                    k.to_string(),
                    r.delay.to_string(),
                    r.attacked.to_string(),
                    r.paired.to_string(),
                    i,
                    j,
                    parity,
                    bit(r.alice_bit),
                    bit(r.eve_bit),
                ]);
            }
            let expected_qber = mix_prob / 2.0;
            let mut verdicts = vec![Verdict::new(
                format!("QBER = {expected_qber:.3} ± {RATE_TOLERANCE}"),
                (stats.qber - expected_qber).abs() <= RATE_TOLERANCE,
            )];
            if mix_prob > 0.0 {
                verdicts.push(Verdict::new(
                    format!("loss on detectable rounds = 0.500 ± {RATE_TOLERANCE}"),
                    (stats.attack_loss_rate - 0.5).abs() <= RATE_TOLERANCE,
                ));
                verdicts.push(Verdict::new(
                    "Eve's information on attacked announced rounds = 1",
                    stats.attacked_announced > 0 && stats.eve_correct == stats.attacked_announced,
                ));
            }
            Ok(Computed {
                payload: Payload::Attack2(stats),
                verdicts,
                table,
            })
        }
        Job::PhaseError {
            n,
            pulses,
            n_ph,
            sweep_max,
        } => phase_error(n, pulses, n_ph, sweep_max).map_err(&err),
        Job::GraphScan {
            n,
            edge_model,
            trials,
            threshold,
            seed,
        } => {
            let samples =
                indexed(trials, |k| component_trial(n, edge_model, seed, k).map(|s| s as f64)).map_err(&err)?;
            let scan = ScanReport::new(
                ScanParams::Component {
                    n,
                    edge_model,
                    threshold,
                    trials,
                    seed,
                },
                samples,
            )
            .map_err(&err)?;
            let mut table = Table::new(&["trial", "largest_component"]);
            for (k, s) in scan.samples.iter().enumerate() {
                table.push(vec![k.to_string(), (*s as u64).to_string()]);
            }
            let verdicts = threshold
                .and_then(|t| lower_bound_claim(format!("component ≥{t} @99%"), &scan))
                .into_iter()
                .collect();
            Ok(Computed {
                payload: Payload::GraphScan(scan),
                verdicts,
                table,
            })
        }
        Job::CriticalScaling {
            ref critical_ns,
            trials,
            seed,
        } => {
            let mut scans = Vec::with_capacity(critical_ns.len());
            let mut table = Table::new(&["n", "trial", "largest_component"]);
            for (idx, &n) in critical_ns.iter().enumerate() {
                let model = EdgeModel::Count(critical_edge_count(n));
                let scan_seed = scaling_seed(seed, idx as u64);
                let samples =
                    indexed(trials, |k| component_trial(n, model, scan_seed, k).map(|s| s as f64)).map_err(&err)?;
                for (k, s) in samples.iter().enumerate() {
                    table.push(vec![n.to_string(), k.to_string(), (*s as u64).to_string()]);
                }
                let params = ScanParams::Component {
                    n,
                    edge_model: model,
                    threshold: None,
                    trials,
                    seed: scan_seed,
                };
                scans.push(ScanReport::new(params, samples).map_err(&err)?);
            }
            let report = ScalingReport::from_scans(scans).map_err(&err)?;
            let verdicts = vec![Verdict::new(
                format!("critical exponent = 2/3 ± {EXPONENT_TOLERANCE}"),
                (report.exponent - 2.0 / 3.0).abs() <= EXPONENT_TOLERANCE,
            )];
            Ok(Computed {
                payload: Payload::CriticalScaling(report),
                verdicts,
                table,
            })
        }
        Job::CoverageScan {
            m,
            n,
            sampling,
            trials,
            threshold,
            remark,
            seed,
        } => {
            let samples = indexed(trials, |k| coverage_trial(m, n, sampling, seed, k)).map_err(&err)?;
            let scan = ScanReport::new(
                ScanParams::Coverage {
                    m,
                    n,
                    sampling,
                    threshold,
                    trials,
                    seed,
                },
                samples,
            )
            .map_err(&err)?;
            let mut table = Table::new(&["trial", "coverage"]);
            for (k, s) in scan.samples.iter().enumerate() {
                table.push(vec![k.to_string(), format_f64(*s)]);
            }
            let mut verdicts: Vec<Verdict> = threshold
                .and_then(|t| lower_bound_claim(format!("coverage ≥{t} @99%"), &scan))
                .into_iter()
                .collect();
            let remark = if remark {
                let c = m as f64 / (n as f64).sqrt();
                let bound = remark_upper_bound(c).map_err(&err)?;
                let check = RemarkCheck {
                    c,
                    bound,
                    mean: scan.summary.mean,
                };
                verdicts.push(Verdict::new(
                    format!("mean coverage ≤ 1 - 1/c^3 + 1/c^4 + {REMARK_SLACK} at c = {c:.4}"),
                    check.mean <= bound + REMARK_SLACK,
                ));
                Some(check)
            } else {
                None
            };
            Ok(Computed {
                payload: Payload::CoverageScan(CoverageReport { scan, remark }),
                verdicts,
                table,
            })
        }
        Job::VerifyAppendixC {
            carrier_dim,
            ancilla_dim,
            trials,
            seed,
            ..
        } => {
            let cfg = job.search_config().expect("verify job carries a search config");
            let verdicts_models =
                indexed(trials, |k| theorem_trial(carrier_dim, ancilla_dim, seed, k)).map_err(&err)?;
            let random_models = TheoremReport::from_verdicts(verdicts_models);
            // Restarts draw from a separate family of streams.
            let search_seed = rrdps_core::seeding::child_seed(seed, 1);
            let outcomes = indexed(cfg.restarts, |k| search_restart(&cfg, search_seed, k)).map_err(&err)?;
            let search = SearchReport::from_restarts(cfg, outcomes).map_err(&err)?;
            let copier = AttackModel::pair_copier();
            let counterexample = Counterexample {
                verdict: judge(&copier),
                residuals: check_constraints(&copier).entries,
                leakage: eve_leakage(&copier),
            };

            let mut table = Table::new(&["source", "index", "residual", "max_leakage", "feasible", "pass"]);
            for (k, v) in random_models.verdicts.iter().enumerate() {
                table.push(vec![
                    "random".into(),
                    k.to_string(),
                    format_f64(v.residual),
                    format_f64(v.max_leakage),
                    v.feasible.to_string(),
                    v.pass.to_string(),
                ]);
            }
            for r in &search.restarts {
                let pass = r.feasible && r.max_leakage <= LEAKAGE_TOLERANCE;
                table.push(vec![
                    "restart".into(),
                    r.restart.to_string(),
                    format_f64(r.residual),
                    format_f64(r.max_leakage),
                    r.feasible.to_string(),
                    pass.to_string(),
                ]);
            }
            let cv = &counterexample.verdict;
            table.push(vec![
                "counterexample".into(),
                "0".into(),
                format_f64(cv.residual),
                format_f64(cv.max_leakage),
                cv.feasible.to_string(),
                cv.pass.to_string(),
            ]);

            let verdicts = vec![
                Verdict::new(
                    format!("random feasible models leak ≤ {LEAKAGE_TOLERANCE:e}"),
                    random_models.all_pass,
                ),
                Verdict::new(
                    format!("optimized models at residual ≤ {FEASIBLE_RESIDUAL:e} leak ≤ {LEAKAGE_TOLERANCE:e}"),
                    search.converged && search.theorem_holds,
                ),
                Verdict::new(
                    "leaky counterexample rejected with named residuals",
                    !cv.feasible && !cv.violated.is_empty(),
                ),
            ];
            let summary = SearchSummary {
                config: search.config,
                best: search.best.summary(),
                restarts: search.restarts,
                converged: search.converged,
                theorem_holds: search.theorem_holds,
            };
            Ok(Computed {
                payload: Payload::AppendixC(AppendixCReport {
                    random_models,
                    search: summary,
                    counterexample,
                }),
                verdicts,
                table,
            })
        }
    }
}

fn phase_error(
    n: Option<usize>,
    pulses: Option<usize>,
    n_ph: Option<u64>,
    sweep_max: Option<usize>,
) -> rrdps_core::Result<Computed> {
    let mut table = Table::new(&["source", "L", "n_ph", "original", "improved"]);
    let mut verdicts = Vec::new();
    let operating_point = n.map(contradiction_report).transpose()?;
    if let Some(r) = &operating_point {
        table.push(vec![
            "operating_point".into(),
            r.n.to_string(),
            r.photons.to_string(),
            format_f64(r.original),
            format_f64(r.improved),
        ]);
        verdicts.push(Verdict::new(
            format!("original e_ph = 1/2 at L = {}", r.n),
            r.original == 0.5,
        ));
        verdicts.push(Verdict::new(
            format!(
                "improved e_ph within {ASYMPTOTE_TOLERANCE:e} of (1-1/e)/2 at L = {}",
                r.n
            ),
            (r.improved - IMPROVED_ASYMPTOTE).abs() <= ASYMPTOTE_TOLERANCE,
        ));
    }
    let point = match (pulses, n_ph) {
        (Some(l), Some(k)) => {
            let params = PhaseErrorParams::new(l, k)?;
            let p = PhasePoint {
                pulses: l,
                n_ph: k,
                original: phase_error_original(params).ok(),
                improved: phase_error_improved(params)?,
            };
            table.push(vec![
                "point".into(),
                l.to_string(),
                k.to_string(),
                cell(p.original.map(format_f64)),
                format_f64(p.improved),
            ]);
            Some(p)
        }
        _ => None,
    };
    let sweep = match sweep_max {
        Some(max) => {
            let mut s = PhaseSweep {
                sweep_max: max,
                checked: 0,
                mismatches: 0,
                min_improved: f64::INFINITY,
                max_improved: f64::NEG_INFINITY,
            };
            for odd in (3..=max).step_by(2) {
                let r = contradiction_report(odd)?;
                s.checked += 1;
                s.mismatches += (r.original != 0.5) as u64;
                s.min_improved = s.min_improved.min(r.improved);
                s.max_improved = s.max_improved.max(r.improved);
                table.push(vec![
                    "sweep".into(),
                    odd.to_string(),
                    r.photons.to_string(),
                    format_f64(r.original),
                    format_f64(r.improved),
                ]);
            }
            verdicts.push(Verdict::new(
                format!("original e_ph = 1/2 for every odd L ≤ {max}"),
                s.mismatches == 0,
            ));
            Some(s)
        }
        None => None,
    };
    Ok(Computed {
        payload: Payload::PhaseError(PhaseErrorReport {
            operating_point,
            point,
            sweep,
        }),
        verdicts,
        table,
    })
}
