//! Argument parsing and the top-level driver behind the binary.

use std::ffi::OsString;
use std::io::Write;

use clap::{Arg, ArgAction};

use crate::config::{Command, ExperimentConfig, RawConfig, HARNESS_KEYS};
use crate::emit::{check_writable, to_canonical_json, write_atomic};
use crate::error::{LabError, LabResult};
use crate::runner::{run, RunOutput};
use crate::{EXIT_CLAIM_FAIL, EXIT_OK, EXIT_USAGE};

const AFTER_HELP: &str = "\
Every key can also be set in a file passed with --config (one `key = value`
per line, `#` starts a comment); flags override file values.

Exit status: 0 when every checked claim passes, 1 when a claim fails,
2 on a usage, validation or I/O error.";

pub fn build_cli() -> clap::Command {
    let mut app = clap::Command::new("rrdps-lab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Simulations of round-robin DPS key distribution with an untrusted measurement device")
        .after_help(AFTER_HELP)
        .subcommand_required(true)
        .arg_required_else_help(true);
    for command in Command::ALL {
        let mut sub = clap::Command::new(command.name()).about(command.about()).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .action(ArgAction::Set)
                .help("read keys from a config file"),
        );
        for spec in command.keys().iter().chain(HARNESS_KEYS) {
            let mut arg = Arg::new(spec.key)
                .long(spec.key)
                .value_name("VALUE")
                .action(ArgAction::Set)
                .help(spec.help);
            if spec.key.contains('_') {
                arg = arg.visible_alias(spec.key.replace('_', "-"));
            }
            sub = sub.arg(arg);
        }
        app = app.subcommand(sub);
    }
    app
}

/// Parses arguments into a validated config. `Ok(None)` means help or the
/// version was requested and printed.
pub fn parse_args<I, T>(args: I) -> LabResult<Option<ExperimentConfig>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match build_cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(None);
        }
        Err(e) => return Err(LabError::usage(e.render().to_string().trim_end().to_string())),
    };
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let command = Command::from_name(name).expect("subcommands mirror Command::ALL");
    let mut flags = RawConfig::new();
    for spec in command.keys().iter().chain(HARNESS_KEYS) {
        if let Some(v) = sub.get_one::<String>(spec.key) {
            flags.insert(spec.key.to_string(), v.clone());
        }
    }
    let file = sub
        .get_one::<String>("config")
        .map(|path| std::fs::read_to_string(path).map_err(|e| LabError::key("config", format!("{path}: {e}"))))
        .transpose()?;
    ExperimentConfig::from_sources(command, file.as_deref(), flags).map(Some)
}

/// Runs a parsed config, writes requested files and echoes the envelope.
pub fn execute(cfg: &ExperimentConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> LabResult<RunOutput> {
    if let Some(p) = &cfg.output {
        check_writable("output", p)?;
    }
    if let Some(p) = &cfg.csv {
        check_writable("csv", p)?;
    }
    let out = run(cfg)?;
    let json = to_canonical_json(&out.envelope)?;
    // Echo first so the numbers survive a failed file write.
    let _ = stdout.write_all(json.as_bytes());
    for v in &out.envelope.verdicts {
        let _ = writeln!(stderr, "{v}");
    }
    if let Some(p) = &cfg.output {
        write_atomic(p, json.as_bytes())?;
    }
    if let Some(p) = &cfg.csv {
        write_atomic(p, &out.table.to_csv()?)?;
    }
    Ok(out)
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(args) {
        Ok(Some(cfg)) => cfg,
        Ok(None) => return EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return EXIT_USAGE;
        }
    };
    match execute(&cfg, stdout, stderr) {
        Ok(out) if out.envelope.all_pass() => EXIT_OK,
        Ok(_) => EXIT_CLAIM_FAIL,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
