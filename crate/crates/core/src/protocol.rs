//! Honest RRDPS rounds: key generation, single-photon phase encoding, the
//! delay-`r` interference measurement and sifting.
//!
//! The delay interferometer is modelled as a projective measurement on the
//! photon's mode space. For delay `r` and offset `o` the modes are paired
//! greedily from index `1 + o`: each free mode `k` is paired with `k + r`
//! when that mode exists and is free. A pair contributes the two projectors
//! `(|k⟩ ± |k+r⟩)/√2`; every other mode gets `|k⟩⟨k|` and counts as a loss.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::seeding::stream_rng;
use crate::{Error, Result};

/// Alice's phase bits `s_1, …, s_L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<u8>", into = "Vec<u8>"))]
pub struct KeyBits(Vec<u8>);

impl KeyBits {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.len() < 2 {
            return Err(Error::param("L", "a pulse train needs at least 2 pulses"));
        }
        if bits.iter().any(|b| *b > 1) {
            return Err(Error::param("bits", "every bit must be 0 or 1"));
        }
        Ok(KeyBits(bits))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bit at 1-based pulse index `k`.
    pub fn bit(&self, k: usize) -> u8 {
        self.0[k - 1]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }
}

impl TryFrom<Vec<u8>> for KeyBits {
    type Error = Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        KeyBits::new(bits)
    }
}

impl From<KeyBits> for Vec<u8> {
    fn from(key: KeyBits) -> Vec<u8> {
        key.0
    }
}

pub fn generate_key_bits<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<KeyBits> {
    if len < 2 {
        return Err(Error::param("L", "a pulse train needs at least 2 pulses"));
    }
    let bits = (0..len).map(|_| rng.random_range(0..2u8)).collect();
    Ok(KeyBits(bits))
}

/// Single-photon amplitudes over the `L` time modes.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingState {
    amplitudes: Vec<Complex64>,
}

pub(crate) const NORM_TOLERANCE: f64 = 1e-12;

impl EncodingState {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::param("L", "a pulse train needs at least 2 pulses"));
        }
        let state = EncodingState { amplitudes };
        if (state.norm_sqr() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState("amplitudes are not normalized"));
        }
        Ok(state)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `(1/√L) Σ (-1)^{s_k} |k⟩`.
pub fn encode_state(key: &KeyBits) -> EncodingState {
    let scale = 1.0 / libm::sqrt(key.len() as f64);
    let amplitudes = key
        .as_slice()
        .iter()
        .map(|&b| Complex64::new(if b == 0 { scale } else { -scale }, 0.0))
        .collect();
    EncodingState { amplitudes }
}

/// Outcome of one photon detection as reported to Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DetectionRecord {
    Detected { i: usize, j: usize, parity: u8 },
    Lost,
}

impl DetectionRecord {
    pub fn is_lost(&self) -> bool {
        matches!(self, DetectionRecord::Lost)
    }

    pub fn pair(&self) -> Option<(usize, usize)> {
        match *self {
            DetectionRecord::Detected { i, j, .. } => Some((i, j)),
            DetectionRecord::Lost => None,
        }
    }

    pub fn parity(&self) -> Option<u8> {
        match *self {
            DetectionRecord::Detected { parity, .. } => Some(parity),
            DetectionRecord::Lost => None,
        }
    }
}

/// Disjoint pairing of modes `1..=L` at delay `r`, starting from `1 + offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    len: usize,
    delay: usize,
    offset: usize,
    pairs: Vec<(usize, usize)>,
}

impl Pairing {
    pub fn new(len: usize, delay: usize, offset: usize) -> Result<Self> {
        check_delay(len, delay)?;
        if offset >= delay {
            return Err(Error::param("offset", "must lie in 0..r"));
        }
        let mut used = vec![false; len + 1];
        let mut pairs = Vec::new();
        for k in (1 + offset)..=len {
            if k + delay > len {
                break;
            }
            if !used[k] && !used[k + delay] {
                used[k] = true;
                used[k + delay] = true;
                pairs.push((k, k + delay));
            }
        }
        Ok(Pairing {
            len,
            delay,
            offset,
            pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Modes not covered by any pair, ascending.
    pub fn unpaired(&self) -> Vec<usize> {
        let mut covered = vec![false; self.len + 1];
        for &(i, j) in &self.pairs {
            covered[i] = true;
            covered[j] = true;
        }
        (1..=self.len).filter(|&k| !covered[k]).collect()
    }

    /// Fraction of modes covered by a pair.
    pub fn covered_fraction(&self) -> f64 {
        (2 * self.pairs.len()) as f64 / self.len as f64
    }
}

/// Expected fraction of modes covered by a pair when the offset is drawn
/// uniformly from `0..r`. Equals the honest detection probability at delay `r`.
pub fn mean_covered_fraction(len: usize, delay: usize) -> Result<f64> {
    check_delay(len, delay)?;
    let mut total = 0.0;
    for offset in 0..delay {
        total += Pairing::new(len, delay, offset)?.covered_fraction();
    }
    Ok(total / delay as f64)
}

fn check_delay(len: usize, delay: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::param("L", "a pulse train needs at least 2 pulses"));
    }
    if delay == 0 || delay >= len {
        return Err(Error::param("r", "delay must satisfy 1 <= r <= L-1"));
    }
    Ok(())
}

/// Which projector of a [`Pairing`] measurement fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// `(|i⟩ + |j⟩)/√2` for `plus`, `(|i⟩ - |j⟩)/√2` otherwise.
    Pair {
        i: usize,
        j: usize,
        plus: bool,
    },
    Unpaired(usize),
}

/// Born-rule weights of every projector of the pairing measurement applied
/// to a single-photon state with the given mode amplitudes.
pub fn outcome_probabilities(amplitudes: &[Complex64], pairing: &Pairing) -> Vec<(Outcome, f64)> {
    debug_assert_eq!(amplitudes.len(), pairing.len());
    let mut out = Vec::with_capacity(amplitudes.len());
    for &(i, j) in pairing.pairs() {
        let (a, b) = (amplitudes[i - 1], amplitudes[j - 1]);
        out.push((Outcome::Pair { i, j, plus: true }, (a + b).norm_sqr() / 2.0));
        out.push((Outcome::Pair { i, j, plus: false }, (a - b).norm_sqr() / 2.0));
    }
    for k in pairing.unpaired() {
        out.push((Outcome::Unpaired(k), amplitudes[k - 1].norm_sqr()));
    }
    out
}

/// Draws an index with probability proportional to its weight. Zero-weight
/// entries are never returned.
pub(crate) fn sample_weighted<R: Rng + ?Sized>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let total: f64 = weights.clone().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (idx, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = idx;
            if u < acc {
                return idx;
            }
        }
    }
    last_positive
}

fn outcome_to_detection(outcome: Outcome) -> DetectionRecord {
    match outcome {
        Outcome::Pair { i, j, plus } => DetectionRecord::Detected {
            i,
            j,
            parity: if plus { 0 } else { 1 },
        },
        Outcome::Unpaired(_) => DetectionRecord::Lost,
    }
}

/// Bob's delay-`r` interference measurement on a single photon.
///
/// Draws the pairing offset uniformly from `0..r`, then samples one
/// projector by the Born rule. A "+" click means parity 0.
pub fn honest_measure<R: Rng + ?Sized>(state: &EncodingState, delay: usize, rng: &mut R) -> Result<DetectionRecord> {
    check_delay(state.len(), delay)?;
    let offset = rng.random_range(0..delay);
    let pairing = Pairing::new(state.len(), delay, offset)?;
    let probs = outcome_probabilities(state.amplitudes(), &pairing);
    let idx = sample_weighted(probs.iter().map(|(_, p)| *p), rng);
    Ok(outcome_to_detection(probs[idx].0))
}

/// Alice's sifted bit `s_i ⊕ s_j` for an announced pair.
pub fn sift(key: &KeyBits, i: usize, j: usize) -> Result<u8> {
    if i == 0 || i >= j || j > key.len() {
        return Err(Error::param("(i, j)", "need 1 <= i < j <= L"));
    }
    Ok(key.bit(i) ^ key.bit(j))
}

/// One complete honest round.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    pub key_bits: KeyBits,
    pub delay: usize,
    pub detection: DetectionRecord,
    pub alice_sifted: Option<u8>,
    pub bob_sifted: Option<u8>,
}

pub fn run_honest_round<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<RoundRecord> {
    let key_bits = generate_key_bits(len, rng)?;
    let delay = rng.random_range(1..len);
    let detection = honest_measure(&encode_state(&key_bits), delay, rng)?;
    let (alice_sifted, bob_sifted) = match detection {
        DetectionRecord::Detected { i, j, parity } => (Some(sift(&key_bits, i, j)?), Some(parity)),
        DetectionRecord::Lost => (None, None),
    };
    Ok(RoundRecord {
        key_bits,
        delay,
        detection,
        alice_sifted,
        bob_sifted,
    })
}

/// Round `index` of an honest session seeded by `master_seed`.
pub fn honest_session_round(len: usize, master_seed: u64, index: u64) -> Result<RoundRecord> {
    run_honest_round(len, &mut stream_rng(master_seed, index))
}

/// Aggregate of an honest session.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HonestStats {
    pub pulses: usize,
    pub rounds: u64,
    pub detections: u64,
    pub errors: u64,
    pub qber: f64,
    pub detection_rate: f64,
    /// `delay_counts[r - 1]` rounds used delay `r`.
    pub delay_counts: Vec<u64>,
}

impl HonestStats {
    pub fn from_rounds<'a>(len: usize, rounds: impl IntoIterator<Item = &'a RoundRecord>) -> Self {
        let mut stats = HonestStats {
            pulses: len,
            rounds: 0,
            detections: 0,
            errors: 0,
            qber: 0.0,
            detection_rate: 0.0,
            delay_counts: vec![0; len.saturating_sub(1)],
        };
        for round in rounds {
            stats.rounds += 1;
            stats.delay_counts[round.delay - 1] += 1;
            if let (Some(a), Some(b)) = (round.alice_sifted, round.bob_sifted) {
                stats.detections += 1;
                if a != b {
                    stats.errors += 1;
                }
            }
        }
        if stats.detections > 0 {
            stats.qber = stats.errors as f64 / stats.detections as f64;
        }
        if stats.rounds > 0 {
            stats.detection_rate = stats.detections as f64 / stats.rounds as f64;
        }
        stats
    }
}

/// Sequential honest session; round `k` uses stream `k` of `master_seed`.
pub fn run_honest_session(len: usize, rounds: u64, master_seed: u64) -> Result<HonestStats> {
    if rounds == 0 {
        return Err(Error::param("rounds", "must be at least 1"));
    }
    let records = (0..rounds)
        .map(|k| honest_session_round(len, master_seed, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(HonestStats::from_rounds(len, &records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream_rng;

    fn key(bits: &[u8]) -> KeyBits {
        KeyBits::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn key_generation_contract() {
        let a = generate_key_bits(3, &mut stream_rng(11, 0)).unwrap();
        let b = generate_key_bits(3, &mut stream_rng(11, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(generate_key_bits(2, &mut stream_rng(5, 5)).unwrap().len(), 2);
        assert!(generate_key_bits(1, &mut stream_rng(0, 0)).is_err());
        assert!(KeyBits::new(vec![0, 2]).is_err());
    }

    #[test]
    fn encoding_examples() {
        let s = encode_state(&key(&[0, 0, 0]));
        let third = 1.0 / libm::sqrt(3.0);
        for a in s.amplitudes() {
            assert!((a.re - third).abs() < 1e-15 && a.im == 0.0);
        }
        let s = encode_state(&key(&[0, 1]));
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - h).abs() < 1e-15);
        assert!((s.amplitudes()[1].re + h).abs() < 1e-15);
        let s = encode_state(&key(&[1, 0, 1, 1]));
        let expect = [-0.5, 0.5, -0.5, -0.5];
        for (a, e) in s.amplitudes().iter().zip(expect) {
            assert_eq!(a.re, e);
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairing_is_greedy_from_offset() {
        let p = Pairing::new(6, 2, 0).unwrap();
        assert_eq!(p.pairs(), &[(1, 3), (2, 4)]);
        assert_eq!(p.unpaired(), vec![5, 6]);
        let p = Pairing::new(6, 2, 1).unwrap();
        assert_eq!(p.pairs(), &[(2, 4), (3, 5)]);
        assert_eq!(p.unpaired(), vec![1, 6]);
        let p = Pairing::new(5, 1, 0).unwrap();
        assert_eq!(p.pairs(), &[(1, 2), (3, 4)]);
        let p = Pairing::new(5, 3, 2).unwrap();
        assert!(p.pairs().is_empty());
        assert!(Pairing::new(5, 3, 3).is_err());
        assert!(Pairing::new(5, 5, 0).is_err());
        assert!(Pairing::new(5, 0, 0).is_err());
    }

    #[test]
    fn measurement_completeness() {
        // Projector weights sum to one for arbitrary normalized states.
        let mut rng = stream_rng(3, 3);
        for len in 2..=9 {
            let raw: Vec<Complex64> = (0..len)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let norm = libm::sqrt(raw.iter().map(|a| a.norm_sqr()).sum::<f64>());
            let amps: Vec<Complex64> = raw.iter().map(|a| a / norm).collect();
            for r in 1..len {
                for o in 0..r {
                    let p = Pairing::new(len, r, o).unwrap();
                    let total: f64 = outcome_probabilities(&amps, &p).iter().map(|(_, w)| w).sum();
                    assert!((total - 1.0).abs() < 1e-12, "L={len} r={r} o={o}");
                }
            }
        }
    }

    #[test]
    fn honest_measure_examples() {
        let mut rng = stream_rng(1, 2);
        let s = encode_state(&key(&[0, 0]));
        for _ in 0..200 {
            let d = honest_measure(&s, 1, &mut rng).unwrap();
            assert_eq!(d, DetectionRecord::Detected { i: 1, j: 2, parity: 0 });
        }
        let s = encode_state(&key(&[0, 1]));
        for _ in 0..200 {
            let d = honest_measure(&s, 1, &mut rng).unwrap();
            assert_eq!(d, DetectionRecord::Detected { i: 1, j: 2, parity: 1 });
        }
        assert!(honest_measure(&s, 2, &mut rng).is_err());
        assert!(honest_measure(&s, 0, &mut rng).is_err());
    }

    #[test]
    fn sift_examples() {
        let k = key(&[0, 1, 1]);
        assert_eq!(sift(&k, 1, 2).unwrap(), 1);
        assert_eq!(sift(&k, 2, 3).unwrap(), 0);
        assert_eq!(sift(&key(&[1, 0, 1, 1]), 1, 4).unwrap(), 0);
        assert!(sift(&k, 0, 2).is_err());
        assert!(sift(&k, 2, 2).is_err());
        assert!(sift(&k, 1, 4).is_err());
    }

    #[test]
    fn honest_rounds_agree_and_replay() {
        for k in 0..500 {
            let r = honest_session_round(5, 99, k).unwrap();
            assert_eq!(r.alice_sifted, r.bob_sifted);
            assert_eq!(r, honest_session_round(5, 99, k).unwrap());
            if let DetectionRecord::Detected { i, j, .. } = r.detection {
                assert_eq!(j - i, r.delay);
            }
        }
    }
}
