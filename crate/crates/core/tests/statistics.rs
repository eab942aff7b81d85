//! Sampled behaviour checked against exact or independently computed
//! distributions.

use std::collections::BTreeMap;

use rrdps_core::attack1::{passive_interference, run_attack1_session, PairPolicy};
use rrdps_core::attack2::{ancilla_outcome_probabilities, entangle, fred_measure_ancilla, run_attack2_session};
use rrdps_core::protocol::{
    encode_state, generate_key_bits, honest_measure, honest_session_round, mean_covered_fraction, sift,
    DetectionRecord, Outcome, Pairing,
};
use rrdps_core::seeding::stream_rng;
use rrdps_core::stats::{clopper_pearson_interval, clopper_pearson_lower};
use statrs::distribution::{Beta, ContinuousCDF};

#[test]
fn key_bits_are_fair() {
    let mut rng = stream_rng(1, 0);
    let mut ones = 0u64;
    let draws = 10_000;
    for _ in 0..draws {
        let key = generate_key_bits(10, &mut rng).unwrap();
        ones += key.as_slice().iter().map(|&b| b as u64).sum::<u64>();
    }
    let mean = ones as f64 / (10 * draws) as f64;
    assert!((mean - 0.5).abs() < 0.01, "{mean}");
}

#[test]
fn delays_are_uniform() {
    let rounds = 10_000u64;
    let mut counts = [0u64; 4];
    for k in 0..rounds {
        counts[honest_session_round(5, 2, k).unwrap().delay - 1] += 1;
    }
    let expected = rounds as f64 / 4.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of chi-square with 3 degrees of freedom.
    assert!(chi2 < 16.266, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn honest_detection_rate_at_delay_two() {
    // Offsets 0 and 1 both pair four of the six modes.
    let exact = 4.0 / 6.0;
    assert!((mean_covered_fraction(6, 2).unwrap() - exact).abs() < 1e-15);
    let mut rng = stream_rng(3, 0);
    let rounds = 100_000;
    let mut detected = 0u64;
    for _ in 0..rounds {
        let key = generate_key_bits(6, &mut rng).unwrap();
        if let DetectionRecord::Detected { i, j, parity } = honest_measure(&encode_state(&key), 2, &mut rng).unwrap() {
            assert_eq!(parity, sift(&key, i, j).unwrap());
            detected += 1;
        }
    }
    let rate = detected as f64 / rounds as f64;
    assert!((rate - exact).abs() < 0.01, "{rate}");
}

#[test]
fn passive_interference_pairs_are_uniform() {
    let mut rng = stream_rng(4, 0);
    let key = generate_key_bits(6, &mut rng).unwrap();
    let draws = 100_000u64;
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for _ in 0..draws {
        let obs = passive_interference(&key, &mut rng).unwrap();
        assert_eq!(obs.parity, sift(&key, obs.i, obs.j).unwrap());
        *counts.entry((obs.i, obs.j)).or_default() += 1;
    }
    assert_eq!(counts.len(), 15);
    let p = 1.0 / 15.0;
    for (&pair, &c) in &counts {
        let (lo, hi) = clopper_pearson_interval(c, draws, 0.999).unwrap();
        assert!(lo <= p && p <= hi, "{pair:?}: {c}");
    }
}

#[test]
fn attack1_loss_tracks_difference_coverage() {
    let s = run_attack1_session(1001, 10_000, PairPolicy::Uniform, 5).unwrap();
    let expected = 1.0 - s.coverage;
    let sd = (expected * (1.0 - expected) / s.rounds as f64).sqrt();
    assert!(
        (s.loss_rate - expected).abs() < 4.0 * sd + 1e-9,
        "{} vs {expected}",
        s.loss_rate
    );
    assert_eq!(s.errors, 0);
    assert_eq!(s.eve_correct, s.announced);
}

#[test]
fn bob_learns_nothing_about_alice_under_attack() {
    let s = run_attack2_session(5, 100_000, 1.0, 6).unwrap();
    assert!(
        s.bob_alice_mutual_information < 0.01,
        "{}",
        s.bob_alice_mutual_information
    );
}

#[test]
fn ancilla_outcome_frequencies_follow_the_born_rule() {
    let samples = 100_000u32;
    for len in 2..=6usize {
        let mut rng = stream_rng(7, len as u64);
        let key = generate_key_bits(len, &mut rng).unwrap();
        let joint = entangle(&encode_state(&key)).unwrap();
        let delay = 1 + (len - 1) / 2;
        let mut exact: BTreeMap<String, f64> = BTreeMap::new();
        for offset in 0..delay {
            let pairing = Pairing::new(len, delay, offset).unwrap();
            for (o, p) in ancilla_outcome_probabilities(&joint, &pairing) {
                *exact.entry(format!("{o:?}")).or_default() += p / delay as f64;
            }
        }
        let mut seen: BTreeMap<String, f64> = BTreeMap::new();
        for _ in 0..samples {
            let out = fred_measure_ancilla(&joint, delay, &mut rng).unwrap();
            if let Outcome::Pair { plus: true, .. } = out.outcome {
                assert!(out.residual.is_some());
            }
            *seen.entry(format!("{:?}", out.outcome)).or_default() += 1.0 / samples as f64;
        }
        let tv: f64 = exact
            .keys()
            .chain(seen.keys())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|k| (exact.get(k).unwrap_or(&0.0) - seen.get(k).unwrap_or(&0.0)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "L={len}: tv={tv}");
    }
}

#[test]
fn clopper_pearson_agrees_with_beta_quantiles() {
    let cases = [
        (1u64, 10u64),
        (5, 10),
        (9, 10),
        (37, 50),
        (990, 1000),
        (999, 1000),
        (1000, 1000),
        (412, 1000),
    ];
    for &(k, n) in &cases {
        for conf in [0.9, 0.95, 0.99] {
            let alpha = 1.0 - conf;
            let lower = Beta::new(k as f64, (n - k + 1) as f64).unwrap().inverse_cdf(alpha);
            let got = clopper_pearson_lower(k, n, conf).unwrap();
            assert!(
                (got - lower).abs() < 1e-9,
                "lower k={k} n={n} conf={conf}: {got} vs {lower}"
            );

            let (lo, hi) = clopper_pearson_interval(k, n, conf).unwrap();
            let lo_ref = Beta::new(k as f64, (n - k + 1) as f64)
                .unwrap()
                .inverse_cdf(alpha / 2.0);
            let hi_ref = if k == n {
                1.0
            } else {
                Beta::new((k + 1) as f64, (n - k) as f64)
                    .unwrap()
                    .inverse_cdf(1.0 - alpha / 2.0)
            };
            assert!(
                (lo - lo_ref).abs() < 1e-9 && (hi - hi_ref).abs() < 1e-9,
                "interval k={k} n={n}"
            );
        }
    }
}
