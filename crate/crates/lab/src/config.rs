//! Experiment configuration: command-line flags layered over an optional
//! key-value file.
//!
//! # Config file grammar
//!
//! ```text
//! file    = { line } ;
//! line    = [ entry ] [ comment ] newline ;
//! entry   = key "=" value ;
//! key     = ( letter | "_" ) { letter | digit | "_" } ;
//! value   = one or more characters other than "#" and newline ;
//! comment = "#" { any character except newline } ;
//! ```
//!
//! Whitespace around keys and values is ignored and values are never quoted.
//! A key may appear at most once. Keys are the same names the flags use
//! (`L`, `rounds`, `mix_prob`, `d_F`, ...) plus the harness keys `seed`,
//! `threads`, `output` and `csv`. Any other key is rejected. When a key is
//! given both in the file and as a flag, the flag wins.
//!
//! ```text
//! # graph claim at the operating point of the passive attack
//! n         = 1000
//! p         = 1/40     # fractions are accepted for real-valued keys
//! trials    = 1000
//! threshold = 200
//! seed      = 7
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use rrdps_core::analysis::{
    remark_upper_bound, validate_component_scan, validate_coverage_scan, PhaseErrorParams, Sampling,
};
use rrdps_core::attack1::{photons_for, PairPolicy};
use rrdps_core::graph::EdgeModel;
use rrdps_core::security::search::SearchConfig;
use rrdps_core::security::PULSES;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Honest,
    Attack1,
    Attack2,
    PhaseError,
    GraphScan,
    CoverageScan,
    VerifyAppendixC,
}

/// A command-specific key with its flag help.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub help: &'static str,
}

const fn spec(key: &'static str, help: &'static str) -> KeySpec {
    KeySpec { key, help }
}

/// Keys every command accepts.
pub const HARNESS_KEYS: &[KeySpec] = &[
    spec("seed", "master seed (mandatory for every randomized command)"),
    spec("threads", "worker threads; 0 means one per available core"),
    spec("output", "write the JSON result envelope to this path"),
    spec("csv", "write one CSV row per round or trial to this path"),
];

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Honest,
        Command::Attack1,
        Command::Attack2,
        Command::PhaseError,
        Command::GraphScan,
        Command::CoverageScan,
        Command::VerifyAppendixC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Honest => "honest",
            Command::Attack1 => "attack1",
            Command::Attack2 => "attack2",
            Command::PhaseError => "phase-error",
            Command::GraphScan => "graph-scan",
            Command::CoverageScan => "coverage-scan",
            Command::VerifyAppendixC => "verify-appendix-c",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::Honest => "Honest protocol session with a trusted measurement device",
            Command::Attack1 => "Passive-interference attack with a cooperating measurement device",
            Command::Attack2 => "Entangling attack where the device measures Eve's ancilla",
            Command::PhaseError => "Evaluate the original and improved phase-error formulas",
            Command::GraphScan => "Largest relative-phase component over random graphs",
            Command::CoverageScan => "Difference coverage of random point sets",
            Command::VerifyAppendixC => "Check that constraint-satisfying collective attacks leak nothing",
        }
    }

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn keys(self) -> &'static [KeySpec] {
        match self {
            Command::Honest => {
                const {
                    &[
                        spec("L", "pulses per train (>= 2) [default 5]"),
                        spec("rounds", "number of rounds [default 10000]"),
                    ]
                }
            }
            Command::Attack1 => {
                const {
                    &[
                        spec("n", "pulses per train, odd and >= 3 [default 1001]"),
                        spec("rounds", "number of rounds [default 10000]"),
                        spec(
                            "policy",
                            "pair choice among equal differences: uniform | first [default uniform]",
                        ),
                    ]
                }
            }
            Command::Attack2 => {
                const {
                    &[
                        spec("L", "pulses per train (>= 2) [default 5]"),
                        spec("rounds", "number of rounds [default 100000]"),
                        spec(
                            "mix_prob",
                            "probability that a round is attacked, in [0, 1] [default 1]",
                        ),
                    ]
                }
            }
            Command::PhaseError => {
                const {
                    &[
                        spec(
                            "n",
                            "odd train length for the attack operating point L = n, n_ph = (n-1)/2",
                        ),
                        spec("L", "pulses for a single evaluation (needs n_ph)"),
                        spec("n_ph", "photon number for a single evaluation (needs L)"),
                        spec(
                            "sweep_max",
                            "check the original formula at every odd n in 3..=sweep_max",
                        ),
                    ]
                }
            }
            Command::GraphScan => {
                const {
                    &[
                        spec("n", "number of nodes [default 1000]"),
                        spec("p", "edge probability of G(n, p) [default 1/40 unless M is given]"),
                        spec("M", "number of uniformly drawn edges, repeats allowed (excludes p)"),
                        spec("trials", "Monte Carlo trials [default 1000]"),
                        spec(
                            "threshold",
                            "component size whose attainment is checked at 99% confidence",
                        ),
                        spec(
                            "critical_ns",
                            "comma-separated node counts for the M = (n-1)/2 scaling study",
                        ),
                    ]
                }
            }
            Command::CoverageScan => {
                const {
                    &[
                        spec("m", "number of points [default 200]"),
                        spec("n", "positions 1..=n [default 1000]"),
                        spec("trials", "Monte Carlo trials [default 1000]"),
                        spec("threshold", "coverage whose attainment is checked at 99% confidence"),
                        spec("sampling", "with_replacement | distinct [default with_replacement]"),
                        spec(
                            "remark",
                            "also compare the mean with 1 - 1/c^3 + 1/c^4, c = m/sqrt(n) [default false]",
                        ),
                    ]
                }
            }
            Command::VerifyAppendixC => {
                const {
                    &[
                        spec("d_F", "carrier dimension, 3..=8 [default 3]"),
                        spec("d_E", "ancilla dimension, 1..=8 [default 2]"),
                        spec("trials", "random constraint-satisfying models [default 100]"),
                        spec("restarts", "optimizer restarts [default 20]"),
                        spec("budget", "objective evaluations per restart [default 40000]"),
                        spec("penalty_weight", "weight of the constraint penalty [default 50]"),
                    ]
                }
            }
        }
    }

    /// Commands that consume randomness refuse to run without a seed.
    pub fn needs_seed(self) -> bool {
        !matches!(self, Command::PhaseError)
    }

    fn accepts(self, key: &str) -> bool {
        self.keys().iter().chain(HARNESS_KEYS).any(|k| k.key == key)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raw `key -> value` strings from one source.
pub type RawConfig = BTreeMap<String, String>;

fn valid_key(key: &str) -> bool {
    let mut chars = key.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses the config-file format documented at the top of this module.
pub fn parse_config_file(text: &str) -> LabResult<RawConfig> {
    let mut out = RawConfig::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| LabError::usage(format!("config line {lineno}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !valid_key(key) {
            return Err(LabError::usage(format!("config line {lineno}: invalid key `{key}`")));
        }
        if value.is_empty() {
            return Err(LabError::key(key, format!("config line {lineno}: missing value")));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(LabError::key(key, format!("config line {lineno}: duplicate key")));
        }
    }
    Ok(out)
}

/// Overlays `flags` on `file` and rejects keys the command does not know.
pub fn merge_sources(command: Command, file: RawConfig, flags: RawConfig) -> LabResult<RawConfig> {
    let mut merged = file;
    merged.extend(flags);
    if let Some(bad) = merged.keys().find(|k| !command.accepts(k)) {
        return Err(LabError::key(bad, format!("unknown key for `{command}`")));
    }
    Ok(merged)
}

struct Values<'a>(&'a RawConfig);

impl Values<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T>(&self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> LabResult<Option<T>> {
        self.raw(key)
            .map(|v| parse(v).ok_or_else(|| LabError::key(key, format!("expected {what}, got `{v}`"))))
            .transpose()
    }

    fn u64(&self, key: &str) -> LabResult<Option<u64>> {
        self.parsed(key, "a nonnegative integer", |v| v.replace('_', "").parse().ok())
    }

    fn usize(&self, key: &str) -> LabResult<Option<usize>> {
        self.parsed(key, "a nonnegative integer", |v| v.replace('_', "").parse().ok())
    }

    fn f64(&self, key: &str) -> LabResult<Option<f64>> {
        self.parsed(key, "a finite real number or fraction a/b", parse_real)
    }

    fn bool(&self, key: &str) -> LabResult<Option<bool>> {
        self.parsed(key, "true or false", |v| match v {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        })
    }

    fn list(&self, key: &str) -> LabResult<Option<Vec<usize>>> {
        self.parsed(key, "a comma-separated list of integers", |v| {
            v.split(',').map(|s| s.trim().replace('_', "").parse().ok()).collect()
        })
    }
}

fn parse_real(v: &str) -> Option<f64> {
    let x = match v.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => v.parse::<f64>().ok()?,
    };
    x.is_finite().then_some(x)
}

/// A fully validated experiment. Serialized as the config echo of every
/// result envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    Honest {
        #[serde(rename = "L")]
        pulses: usize,
        rounds: u64,
        seed: u64,
    },
    Attack1 {
        n: usize,
        rounds: u64,
        policy: PairPolicy,
        seed: u64,
    },
    Attack2 {
        #[serde(rename = "L")]
        pulses: usize,
        rounds: u64,
        mix_prob: f64,
        seed: u64,
    },
    PhaseError {
        n: Option<usize>,
        #[serde(rename = "L")]
        pulses: Option<usize>,
        n_ph: Option<u64>,
        sweep_max: Option<usize>,
    },
    GraphScan {
        n: usize,
        edge_model: EdgeModel,
        trials: u64,
        threshold: Option<f64>,
        seed: u64,
    },
    CriticalScaling {
        critical_ns: Vec<usize>,
        trials: u64,
        seed: u64,
    },
    CoverageScan {
        m: usize,
        n: usize,
        sampling: Sampling,
        trials: u64,
        threshold: Option<f64>,
        remark: bool,
        seed: u64,
    },
    VerifyAppendixC {
        #[serde(rename = "d_F")]
        carrier_dim: usize,
        #[serde(rename = "d_E")]
        ancilla_dim: usize,
        trials: u64,
        restarts: u64,
        budget: u64,
        penalty_weight: f64,
        seed: u64,
    },
}

impl Job {
    pub fn command_name(&self) -> &'static str {
        match self {
            Job::Honest { .. } => "honest",
            Job::Attack1 { .. } => "attack1",
            Job::Attack2 { .. } => "attack2",
            Job::PhaseError { .. } => "phase-error",
            Job::GraphScan { .. } | Job::CriticalScaling { .. } => "graph-scan",
            Job::CoverageScan { .. } => "coverage-scan",
            Job::VerifyAppendixC { .. } => "verify-appendix-c",
        }
    }

    pub fn search_config(&self) -> Option<SearchConfig> {
        match *self {
            Job::VerifyAppendixC {
                carrier_dim,
                ancilla_dim,
                restarts,
                budget,
                penalty_weight,
                ..
            } => Some(SearchConfig {
                carrier_dim,
                ancilla_dim,
                penalty_weight,
                budget,
                restarts,
            }),
            _ => None,
        }
    }
}

/// Everything a run needs: the job plus where and how to execute it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub job: Job,
    /// `0` lets the pool pick one thread per core.
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

fn at_least(key: &str, value: u64, min: u64) -> LabResult<()> {
    if value < min {
        return Err(LabError::key(key, format!("must be at least {min}")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Builds and validates a config from merged raw values. No experiment
    /// work happens here, but every precondition is checked.
    pub fn from_raw(command: Command, raw: &RawConfig) -> LabResult<Self> {
        if let Some(bad) = raw.keys().find(|k| !command.accepts(k)) {
            return Err(LabError::key(bad, format!("unknown key for `{command}`")));
        }
        let v = Values(raw);
        let seed = v.u64("seed")?;
        let require_seed =
            || seed.ok_or_else(|| LabError::key("seed", format!("`{command}` needs an explicit --seed")));
        let job = match command {
            Command::Honest => {
                let pulses = v.usize("L")?.unwrap_or(5);
                let rounds = v.u64("rounds")?.unwrap_or(10_000);
                at_least("L", pulses as u64, 2)?;
                at_least("rounds", rounds, 1)?;
                Job::Honest {
                    pulses,
                    rounds,
                    seed: require_seed()?,
                }
            }
            Command::Attack1 => {
                let n = v.usize("n")?.unwrap_or(1001);
                let rounds = v.u64("rounds")?.unwrap_or(10_000);
                let policy = v.parsed("policy", "uniform or first", |s| match s {
                    "uniform" => Some(PairPolicy::Uniform),
                    "first" => Some(PairPolicy::First),
                    _ => None,
                })?;
                photons_for(n).map_err(precondition)?;
                at_least("rounds", rounds, 1)?;
                Job::Attack1 {
                    n,
                    rounds,
                    policy: policy.unwrap_or_default(),
                    seed: require_seed()?,
                }
            }
            Command::Attack2 => {
                let pulses = v.usize("L")?.unwrap_or(5);
                let rounds = v.u64("rounds")?.unwrap_or(100_000);
                let mix_prob = v.f64("mix_prob")?.unwrap_or(1.0);
                at_least("L", pulses as u64, 2)?;
                at_least("rounds", rounds, 1)?;
                if !(0.0..=1.0).contains(&mix_prob) {
                    return Err(LabError::key("mix_prob", "must lie in [0, 1]"));
                }
                Job::Attack2 {
                    pulses,
                    rounds,
                    mix_prob,
                    seed: require_seed()?,
                }
            }
            Command::PhaseError => {
                let mut n = v.usize("n")?;
                let pulses = v.usize("L")?;
                let n_ph = v.u64("n_ph")?;
                let sweep_max = v.usize("sweep_max")?;
                if pulses.is_some() != n_ph.is_some() {
                    return Err(LabError::key(
                        if pulses.is_some() { "n_ph" } else { "L" },
                        "L and n_ph go together",
                    ));
                }
                if let (Some(l), Some(k)) = (pulses, n_ph) {
                    PhaseErrorParams::new(l, k).map_err(precondition)?;
                }
                if let Some(m) = sweep_max {
                    at_least("sweep_max", m as u64, 3)?;
                }
                if n.is_none() && pulses.is_none() && sweep_max.is_none() {
                    n = Some(1001);
                }
                if let Some(n) = n {
                    if n < 3 || n % 2 == 0 {
                        return Err(LabError::key("n", "must be odd and at least 3"));
                    }
                }
                Job::PhaseError {
                    n,
                    pulses,
                    n_ph,
                    sweep_max,
                }
            }
            Command::GraphScan => {
                let trials = v.u64("trials")?.unwrap_or(1000);
                at_least("trials", trials, 1)?;
                if let Some(critical_ns) = v.list("critical_ns")? {
                    for key in ["n", "p", "M", "threshold"] {
                        if raw.contains_key(key) {
                            return Err(LabError::key(key, "cannot be combined with critical_ns"));
                        }
                    }
                    if critical_ns.len() < 2 {
                        return Err(LabError::key("critical_ns", "a scaling fit needs at least two sizes"));
                    }
                    if let Some(&bad) = critical_ns.iter().find(|&&n| n < 3) {
                        return Err(LabError::key("critical_ns", format!("size {bad} is below 3")));
                    }
                    Job::CriticalScaling {
                        critical_ns,
                        trials,
                        seed: require_seed()?,
                    }
                } else {
                    let n = v.usize("n")?.unwrap_or(1000);
                    let edge_model = match (v.f64("p")?, v.u64("M")?) {
                        (Some(_), Some(_)) => return Err(LabError::key("M", "give either p or M, not both")),
                        (Some(p), None) => EdgeModel::Probability(p),
                        (None, Some(m)) => EdgeModel::Count(m),
                        (None, None) => EdgeModel::Probability(1.0 / 40.0),
                    };
                    let threshold = v.f64("threshold")?;
                    validate_component_scan(n, edge_model, trials).map_err(precondition)?;
                    Job::GraphScan {
                        n,
                        edge_model,
                        trials,
                        threshold,
                        seed: require_seed()?,
                    }
                }
            }
            Command::CoverageScan => {
                let m = v.usize("m")?.unwrap_or(200);
                let n = v.usize("n")?.unwrap_or(1000);
                let trials = v.u64("trials")?.unwrap_or(1000);
                let threshold = v.f64("threshold")?;
                let sampling = v
                    .parsed("sampling", "with_replacement or distinct", |s| match s {
                        "with_replacement" => Some(Sampling::WithReplacement),
                        "distinct" => Some(Sampling::Distinct),
                        _ => None,
                    })?
                    .unwrap_or_default();
                let remark = v.bool("remark")?.unwrap_or(false);
                validate_coverage_scan(m, n, sampling, trials).map_err(precondition)?;
                if remark {
                    remark_upper_bound(m as f64 / (n as f64).sqrt())
                        .map_err(|_| LabError::key("remark", "needs m > sqrt(n)"))?;
                }
                Job::CoverageScan {
                    m,
                    n,
                    sampling,
                    trials,
                    threshold,
                    remark,
                    seed: require_seed()?,
                }
            }
            Command::VerifyAppendixC => {
                let trials = v.u64("trials")?.unwrap_or(100);
                at_least("trials", trials, 1)?;
                let cfg = SearchConfig {
                    carrier_dim: v.usize("d_F")?.unwrap_or(PULSES),
                    ancilla_dim: v.usize("d_E")?.unwrap_or(2),
                    penalty_weight: v.f64("penalty_weight")?.unwrap_or(50.0),
                    budget: v.u64("budget")?.unwrap_or(40_000),
                    restarts: v.u64("restarts")?.unwrap_or(20),
                };
                cfg.validate().map_err(precondition)?;
                Job::VerifyAppendixC {
                    carrier_dim: cfg.carrier_dim,
                    ancilla_dim: cfg.ancilla_dim,
                    trials,
                    restarts: cfg.restarts,
                    budget: cfg.budget,
                    penalty_weight: cfg.penalty_weight,
                    seed: require_seed()?,
                }
            }
        };
        Ok(ExperimentConfig {
            job,
            threads: v.usize("threads")?.unwrap_or(0),
            output: v.raw("output").map(PathBuf::from),
            csv: v.raw("csv").map(PathBuf::from),
        })
    }

    /// Parses the optional config file, overlays the flags and validates.
    pub fn from_sources(command: Command, file: Option<&str>, flags: RawConfig) -> LabResult<Self> {
        let file = file.map(parse_config_file).transpose()?.unwrap_or_default();
        let merged = merge_sources(command, file, flags)?;
        Self::from_raw(command, &merged)
    }
}
