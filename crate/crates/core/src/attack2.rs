//! Index-entangling attack with a post-selecting measurement device.
//!
//! Eve couples Alice's photon to an ancilla that records the time mode,
//! `Σ c_k |k⟩|k⟩_E`, keeps the photon and forwards the ancilla into Bob's
//! lab. Fred measures the ancilla in the delay-`r` ± basis. A "+" outcome is
//! announced with a random key bit, a "−" outcome as "no click". The photon
//! Eve kept collapses onto `c_i|i⟩ + c_j|j⟩`, whose relative phase she reads
//! with certainty once `(i, j)` is public.
//!
//! The ancilla projectors act on orthogonal photon modes, so Fred's outcome
//! probabilities are `(|c_i|² + |c_j|²)/2` for either sign and carry no
//! information about Alice's phases; half of all paired outcomes are lost
//! and Bob's bit is uncorrelated with Alice's.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::protocol::{
    encode_state, generate_key_bits, honest_measure, sample_weighted, sift, DetectionRecord, EncodingState, Outcome,
    Pairing, NORM_TOLERANCE,
};
use crate::seeding::stream_rng;
use crate::stats::binary_mutual_information;
use crate::{Error, Result};

/// Photon–ancilla state in Schmidt form: amplitude `c_k` on `|k⟩_A|k⟩_E`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    amps: Vec<Complex64>,
}

impl JointState {
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `|k⟩ → |k⟩_A |k⟩_E`.
pub fn entangle(state: &EncodingState) -> Result<JointState> {
    if (state.norm_sqr() - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvalidState("encoding state is not normalized"));
    }
    Ok(JointState {
        amps: state.amplitudes().to_vec(),
    })
}

/// Eve's photon after Fred's "+" outcome on pair `(i, j)`: normalized
/// amplitudes on modes `i` and `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualState {
    pub i: usize,
    pub j: usize,
    pub amps: [Complex64; 2],
}

impl ResidualState {
    /// Probability that a `(|i⟩ + |j⟩)/√2` projection succeeds.
    pub fn plus_probability(&self) -> f64 {
        (self.amps[0] + self.amps[1]).norm_sqr() / 2.0
    }
}

/// Eve's ± measurement on the retained photon. The outcome is
/// deterministic for any state Alice can send; anything else is rejected.
pub fn eve_extract(residual: &ResidualState) -> Result<u8> {
    let p_plus = residual.plus_probability();
    if (p_plus - 1.0).abs() <= 1e-12 {
        Ok(0)
    } else if p_plus <= 1e-12 {
        Ok(1)
    } else {
        Err(Error::InvalidState("residual photon has no definite relative phase"))
    }
}

/// Born-rule weights of Fred's ancilla measurement for one pairing. The
/// photon is left unmeasured, so each sign of pair `(i, j)` has weight
/// `(|c_i|² + |c_j|²)/2`.
pub fn ancilla_outcome_probabilities(joint: &JointState, pairing: &Pairing) -> Vec<(Outcome, f64)> {
    let c = &joint.amps;
    let mut out = Vec::with_capacity(c.len());
    for &(i, j) in pairing.pairs() {
        let w = (c[i - 1].norm_sqr() + c[j - 1].norm_sqr()) / 2.0;
        out.push((Outcome::Pair { i, j, plus: true }, w));
        out.push((Outcome::Pair { i, j, plus: false }, w));
    }
    for k in pairing.unpaired() {
        out.push((Outcome::Unpaired(k), c[k - 1].norm_sqr()));
    }
    out
}

/// Photon state conditioned on an ancilla outcome (normalized), or `None`
/// for an unpaired mode.
pub fn collapse(joint: &JointState, outcome: Outcome) -> Option<ResidualState> {
    match outcome {
        Outcome::Pair { i, j, plus } => {
            let a = joint.amps[i - 1];
            let b = if plus { joint.amps[j - 1] } else { -joint.amps[j - 1] };
            let norm = libm::sqrt(a.norm_sqr() + b.norm_sqr());
            (norm > 0.0).then(|| ResidualState {
                i,
                j,
                amps: [a / norm, b / norm],
            })
        }
        Outcome::Unpaired(_) => None,
    }
}

/// What Fred's ancilla measurement produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaOutcome {
    pub outcome: Outcome,
    /// Eve's photon, kept only when Fred announces.
    pub residual: Option<ResidualState>,
    /// What Fred reports to Bob.
    pub announced: DetectionRecord,
}

impl AncillaOutcome {
    pub fn eve_bit(&self) -> Result<u8> {
        match &self.residual {
            Some(r) => eve_extract(r),
            None => Err(Error::InvalidState("round was lost; Eve holds no residual")),
        }
    }
}

pub fn fred_measure_ancilla<R: Rng + ?Sized>(joint: &JointState, delay: usize, rng: &mut R) -> Result<AncillaOutcome> {
    let len = joint.len();
    if delay == 0 || delay >= len {
        return Err(Error::param("r", "delay must satisfy 1 <= r <= L-1"));
    }
    let offset = rng.random_range(0..delay);
    let pairing = Pairing::new(len, delay, offset)?;
    let probs = ancilla_outcome_probabilities(joint, &pairing);
    let outcome = probs[sample_weighted(probs.iter().map(|(_, p)| *p), rng)].0;
    Ok(match outcome {
        Outcome::Pair { i, j, plus: true } => AncillaOutcome {
            outcome,
            residual: collapse(joint, outcome),
            announced: DetectionRecord::Detected {
                i,
                j,
                parity: rng.random_range(0..2),
            },
        },
        _ => AncillaOutcome {
            outcome,
            residual: None,
            announced: DetectionRecord::Lost,
        },
    })
}

/// One round of a (possibly mixed) attack session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Attack2Round {
    pub delay: usize,
    pub attacked: bool,
    /// The photon (or ancilla) landed in a paired mode, i.e. the round would
    /// have produced a click on an honest lossless device.
    pub paired: bool,
    pub detection: DetectionRecord,
    pub alice_bit: Option<u8>,
    pub eve_bit: Option<u8>,
}

fn check_mix(mix_prob: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mix_prob) {
        return Err(Error::param("mix_prob", "must lie in [0, 1]"));
    }
    Ok(())
}

/// Round `index` of a session with master seed `master_seed`.
///
/// With probability `mix_prob` the round is attacked. When the session
/// attacks at all (`mix_prob > 0`), Eve also passes non-attacked photons
/// through a 3 dB channel, so the loss rate is the same on both branches and
/// Bob cannot tell them apart by counting clicks.
pub fn attack2_round(len: usize, mix_prob: f64, master_seed: u64, index: u64) -> Result<Attack2Round> {
    check_mix(mix_prob)?;
    let mut rng = stream_rng(master_seed, index);
    let key = generate_key_bits(len, &mut rng)?;
    let delay = rng.random_range(1..len);
    let attacked = rng.random::<f64>() < mix_prob;
    let state = encode_state(&key);
    let (paired, detection, eve_bit) = if attacked {
        let out = fred_measure_ancilla(&entangle(&state)?, delay, &mut rng)?;
        let paired = matches!(out.outcome, Outcome::Pair { .. });
        let eve = out.residual.as_ref().map(eve_extract).transpose()?;
        (paired, out.announced, eve)
    } else {
        let det = honest_measure(&state, delay, &mut rng)?;
        let paired = !det.is_lost();
        let det = if mix_prob > 0.0 && paired && rng.random::<bool>() {
            DetectionRecord::Lost
        } else {
            det
        };
        (paired, det, None)
    };
    let alice_bit = match detection {
        DetectionRecord::Detected { i, j, .. } => Some(sift(&key, i, j)?),
        DetectionRecord::Lost => None,
    };
    Ok(Attack2Round {
        delay,
        attacked,
        paired,
        detection,
        alice_bit,
        eve_bit,
    })
}

/// Session summary. QBER is over announced rounds; Eve's score is over
/// attacked announced rounds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Attack2Stats {
    pub pulses: usize,
    pub mix_prob: f64,
    pub rounds: u64,
    pub attacked: u64,
    pub announced: u64,
    pub losses: u64,
    /// Losses from unpaired modes, present on an honest device too.
    pub boundary_losses: u64,
    pub errors: u64,
    pub attacked_announced: u64,
    pub eve_correct: u64,
    pub qber: f64,
    pub loss_rate: f64,
    /// Loss among rounds that an honest lossless device would have detected.
    pub attack_loss_rate: f64,
    pub eve_information: f64,
    /// Bob-vs-Alice bit counts on attacked announced rounds, `[alice][bob]`.
    pub attacked_bit_counts: [[u64; 2]; 2],
    pub bob_alice_mutual_information: f64,
}

impl Attack2Stats {
    pub fn from_rounds<'a>(len: usize, mix_prob: f64, rounds: impl IntoIterator<Item = &'a Attack2Round>) -> Self {
        let mut s = Attack2Stats {
            pulses: len,
            mix_prob,
            rounds: 0,
            attacked: 0,
            announced: 0,
            losses: 0,
            boundary_losses: 0,
            errors: 0,
            attacked_announced: 0,
            eve_correct: 0,
            qber: 0.0,
            loss_rate: 0.0,
            attack_loss_rate: 0.0,
            eve_information: 0.0,
            attacked_bit_counts: [[0; 2]; 2],
            bob_alice_mutual_information: 0.0,
        };
        for r in rounds {
            s.rounds += 1;
            s.attacked += r.attacked as u64;
            if !r.paired {
                s.boundary_losses += 1;
            }
            match (r.detection, r.alice_bit) {
                (DetectionRecord::Detected { parity, .. }, Some(alice)) => {
                    s.announced += 1;
                    if parity != alice {
                        s.errors += 1;
                    }
                    if r.attacked {
                        s.attacked_announced += 1;
                        s.attacked_bit_counts[alice as usize][parity as usize] += 1;
                        if r.eve_bit == Some(alice) {
                            s.eve_correct += 1;
                        }
                    }
                }
                _ => s.losses += 1,
            }
        }
        if s.announced > 0 {
            s.qber = s.errors as f64 / s.announced as f64;
        }
        if s.rounds > 0 {
            s.loss_rate = s.losses as f64 / s.rounds as f64;
        }
        let paired = s.rounds - s.boundary_losses;
        if paired > 0 {
            s.attack_loss_rate = (s.losses - s.boundary_losses) as f64 / paired as f64;
        }
        if s.attacked_announced > 0 {
            s.eve_information = s.eve_correct as f64 / s.attacked_announced as f64;
        }
        s.bob_alice_mutual_information = binary_mutual_information(s.attacked_bit_counts);
        s
    }
}

pub fn run_attack2_session(len: usize, rounds: u64, mix_prob: f64, master_seed: u64) -> Result<Attack2Stats> {
    check_mix(mix_prob)?;
    if len < 2 {
        return Err(Error::param("L", "a pulse train needs at least 2 pulses"));
    }
    if rounds == 0 {
        return Err(Error::param("rounds", "must be at least 1"));
    }
    let records = (0..rounds)
        .map(|k| attack2_round(len, mix_prob, master_seed, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(Attack2Stats::from_rounds(len, mix_prob, &records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::KeyBits;
    use alloc::vec;

    fn joint(bits: &[u8]) -> JointState {
        entangle(&encode_state(&KeyBits::new(bits.to_vec()).unwrap())).unwrap()
    }

    #[test]
    fn entangle_examples() {
        let j = joint(&[0, 0]);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!(j.amplitudes().iter().all(|c| (c.re - h).abs() < 1e-15));
        let j = joint(&[0, 1, 0]);
        let t = 1.0 / libm::sqrt(3.0);
        let signs = [1.0, -1.0, 1.0];
        for (c, s) in j.amplitudes().iter().zip(signs) {
            assert!((c.re - s * t).abs() < 1e-15 && c.im == 0.0);
        }
        assert!((j.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_pulse_round_always_announces_on_plus() {
        let j = joint(&[0, 0]);
        let mut rng = stream_rng(5, 0);
        let mut bits = [0u32; 2];
        for _ in 0..400 {
            let out = fred_measure_ancilla(&j, 1, &mut rng).unwrap();
            match out.outcome {
                Outcome::Pair { plus: true, .. } => {
                    let (i, jj) = out.announced.pair().unwrap();
                    assert_eq!((i, jj), (1, 2));
                    bits[out.announced.parity().unwrap() as usize] += 1;
                    assert_eq!(out.eve_bit().unwrap(), 0);
                }
                Outcome::Pair { plus: false, .. } => {
                    assert!(out.announced.is_lost());
                    assert!(out.eve_bit().is_err());
                }
                Outcome::Unpaired(_) => panic!("L=2, r=1 pairs every mode"),
            }
        }
        // Bob's bit is a fair coin.
        assert!(bits[0] > 50 && bits[1] > 50);
    }

    #[test]
    fn residual_readout() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let plus = ResidualState {
            i: 1,
            j: 2,
            amps: [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        };
        assert_eq!(eve_extract(&plus).unwrap(), 0);
        let minus = ResidualState {
            amps: [Complex64::new(-h, 0.0), Complex64::new(h, 0.0)],
            ..plus
        };
        assert_eq!(eve_extract(&minus).unwrap(), 1);
        let mixed = ResidualState {
            amps: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            ..plus
        };
        assert!(eve_extract(&mixed).is_err());
    }

    #[test]
    fn eve_is_exact_exhaustively() {
        // Every key for L <= 6, every delay and offset, every reachable
        // "+" outcome: Eve's readout equals Alice's sifted bit.
        for len in 2..=6usize {
            for code in 0..(1u32 << len) {
                let bits: Vec<u8> = (0..len).map(|b| ((code >> b) & 1) as u8).collect();
                let key = KeyBits::new(bits.clone()).unwrap();
                let j = joint(&bits);
                for r in 1..len {
                    for o in 0..r {
                        let p = Pairing::new(len, r, o).unwrap();
                        for (out, w) in ancilla_outcome_probabilities(&j, &p) {
                            if let Outcome::Pair { i, j: jj, plus } = out {
                                assert!(w > 0.0);
                                let res = collapse(&j, out).unwrap();
                                assert!((res.amps[0].norm_sqr() + res.amps[1].norm_sqr() - 1.0).abs() < 1e-12);
                                let expect = sift(&key, i, jj).unwrap() ^ (!plus as u8);
                                assert_eq!(eve_extract(&res).unwrap(), expect);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pure_attack_accounting() {
        let s = run_attack2_session(5, 2000, 1.0, 3).unwrap();
        assert_eq!(s.announced + s.losses, s.rounds);
        assert_eq!(s.attacked, s.rounds);
        assert_eq!(s.eve_correct, s.attacked_announced);
        let honest = run_attack2_session(5, 2000, 0.0, 3).unwrap();
        assert_eq!(honest.errors, 0);
        assert_eq!(honest.attack_loss_rate, 0.0);
        assert_eq!(honest.losses, honest.boundary_losses);
        assert!(run_attack2_session(5, 10, 1.5, 0).is_err());
        assert!(run_attack2_session(1, 10, 0.5, 0).is_err());
        assert_eq!(
            vec![run_attack2_session(4, 50, 0.5, 1).unwrap()],
            vec![run_attack2_session(4, 50, 0.5, 1).unwrap()]
        );
    }
}
