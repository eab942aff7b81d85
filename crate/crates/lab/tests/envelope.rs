use rrdps_lab::cli::parse_args;
use rrdps_lab::emit::{format_f64, to_canonical_json};
use rrdps_lab::{run, ExperimentConfig, ResultEnvelope};

fn config(args: &str, threads: usize) -> ExperimentConfig {
    let argv = std::iter::once("rrdps-lab").chain(args.split_whitespace());
    let mut cfg = parse_args(argv).unwrap().unwrap();
    cfg.threads = threads;
    cfg
}

const COMMANDS: [&str; 7] = [
    "honest --seed 11 --L 5 --rounds 500",
    "attack1 --seed 11 --n 101 --rounds 500",
    "attack2 --seed 11 --rounds 2000 --mix_prob 0.5",
    "phase-error --n 101 --L 10 --n_ph 20 --sweep_max 51",
    "graph-scan --seed 11 --n 200 --p 0.02 --trials 40 --threshold 50",
    "coverage-scan --seed 11 --m 30 --n 200 --trials 40 --threshold 0.5",
    "verify-appendix-c --seed 11 --trials 5 --restarts 2 --budget 2000",
];

#[test]
fn json_round_trips_losslessly() {
    for args in COMMANDS {
        let env = run(&config(args, 1)).unwrap().envelope;
        let text = to_canonical_json(&env).unwrap();
        let back: ResultEnvelope = serde_json::from_str(&text).unwrap();
        assert_eq!(back, env, "{args}");
        assert_eq!(to_canonical_json(&back).unwrap(), text, "{args}");
    }
}

#[test]
fn payload_is_independent_of_thread_count() {
    for args in COMMANDS {
        let one = run(&config(args, 1)).unwrap();
        let four = run(&config(args, 4)).unwrap();
        assert_eq!(
            to_canonical_json(&one.envelope.payload).unwrap(),
            to_canonical_json(&four.envelope.payload).unwrap(),
            "{args}"
        );
        assert_eq!(one.table, four.table, "{args}");
        assert_eq!(one.envelope.verdicts, four.envelope.verdicts);
    }
}

#[test]
fn canonical_form_is_sorted_and_fixed_precision() {
    assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
    assert_eq!(format_f64(200.0), "2.0000000000000000e2");
    for x in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300, f64::MIN_POSITIVE] {
        assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
    }

    let env = run(&config("honest --seed 2 --rounds 50", 1)).unwrap().envelope;
    let text = to_canonical_json(&env).unwrap();
    let top: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \""))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    let mut sorted = top.clone();
    sorted.sort_unstable();
    assert_eq!(top, sorted);
    assert_eq!(
        top,
        ["config", "duration_seconds", "payload", "schema", "verdicts", "version"]
    );
    assert!(text.contains("\"qber\": 0.0000000000000000e0"));
    // Emitting the same envelope twice gives the same bytes.
    assert_eq!(to_canonical_json(&env).unwrap(), text);
}

#[test]
fn critical_scaling_matches_the_sequential_path() {
    let out = run(&config("graph-scan --seed 4 --critical_ns 100,400,1600 --trials 30", 2)).unwrap();
    let reference = rrdps_core::analysis::critical_scaling(&[100, 400, 1600], 30, 4).unwrap();
    match out.envelope.payload {
        rrdps_lab::Payload::CriticalScaling(r) => assert_eq!(r, reference),
        other => panic!("{other:?}"),
    }
    assert_eq!(out.table.rows.len(), 90);
}
