//! Passive-interference harvesting with a cooperating measurement device.
//!
//! Eve interferes each of the `(n-1)/2` photons of a pulse train with a
//! flat-phase reference and learns `s_i ⊕ s_j` for one random pair per
//! photon. XOR transitivity turns the largest connected component of those
//! pairs into a set of pulses whose mutual phases she knows. The device
//! inside Bob's lab (Fred) holds the same component and, for every delay
//! `r` that occurs as a difference of two members, announces such a pair
//! with its known parity; any other delay is reported as a loss.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::graph::{build_phase_graph, uniform_pair, ComponentInfo, PairObservation, PhaseGraph};
use crate::protocol::{generate_key_bits, sift, DetectionRecord, KeyBits};
use crate::seeding::stream_rng;
use crate::{Error, Result};

/// Which detector pair fired in a passive interference event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClickPattern {
    /// `c_i c_j`: the same detector clicked at both times.
    SameDetector,
    /// `c_i d_j`: different detectors clicked.
    DifferentDetectors,
}

impl ClickPattern {
    pub fn parity(self) -> u8 {
        match self {
            ClickPattern::SameDetector => 0,
            ClickPattern::DifferentDetectors => 1,
        }
    }
}

/// Unnormalized weights `[1 + (-1)^{s_i+s_j}, 1 - (-1)^{s_i+s_j}]` of the two
/// click patterns for pulses `i`, `j`.
pub fn click_weights(key: &KeyBits, i: usize, j: usize) -> [f64; 2] {
    let sign = if (key.bit(i) ^ key.bit(j)) == 0 { 1.0 } else { -1.0 };
    [1.0 + sign, 1.0 - sign]
}

/// One photon's worth of passive interference: a uniformly random pair and
/// the parity decoded from which detectors clicked.
pub fn passive_interference<R: Rng + ?Sized>(key: &KeyBits, rng: &mut R) -> Result<PairObservation> {
    let n = key.len();
    if n < 2 {
        return Err(Error::param("n", "need at least 2 pulses"));
    }
    let (i, j) = uniform_pair(n, rng);
    let [same, _] = click_weights(key, i, j);
    let pattern = if rng.random::<f64>() * 2.0 < same {
        ClickPattern::SameDetector
    } else {
        ClickPattern::DifferentDetectors
    };
    PairObservation::new(i, j, pattern.parity())
}

/// Independent passive-interference observations, one per photon.
pub fn harvest<R: Rng + ?Sized>(key: &KeyBits, photons: usize, rng: &mut R) -> Result<Vec<PairObservation>> {
    if photons == 0 {
        return Err(Error::param("photons", "must be at least 1"));
    }
    (0..photons).map(|_| passive_interference(key, rng)).collect()
}

/// Photon count `(n-1)/2` of an attacked train; `n` must be odd and ≥ 3.
pub fn photons_for(n: usize) -> Result<usize> {
    if n < 3 {
        return Err(Error::param("n", "need at least 3 pulses"));
    }
    if n.is_multiple_of(2) {
        return Err(Error::param("n", "pulse count must be odd"));
    }
    Ok((n - 1) / 2)
}

/// Per-pair edge probability `((n-1)/2) / C(n,2)` as a reduced fraction.
pub fn edge_probability(n: usize) -> Result<(u64, u64)> {
    let photons = photons_for(n)? as u64;
    let n = n as u64;
    let pairs = n * (n - 1) / 2;
    let g = num_integer::gcd(photons, pairs);
    Ok((photons / g, pairs / g))
}

/// Pairs of component members binned by index difference.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DifferenceTable {
    pub n: usize,
    pub pairs_by_delay: BTreeMap<usize, Vec<(usize, usize)>>,
}

impl DifferenceTable {
    pub fn pairs(&self, delay: usize) -> Option<&[(usize, usize)]> {
        self.pairs_by_delay.get(&delay).map(Vec::as_slice)
    }

    /// Fraction of `{1, …, n-1}` present as a difference.
    pub fn coverage(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.pairs_by_delay.len() as f64 / (self.n - 1) as f64
    }
}

pub fn difference_table(component: &ComponentInfo, n: usize) -> Result<DifferenceTable> {
    if component.is_empty() {
        return Err(Error::param("component", "must be nonempty"));
    }
    if component.members.last().is_some_and(|&m| m > n) {
        return Err(Error::param("component", "member index exceeds n"));
    }
    let mut pairs_by_delay: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    let m = &component.members;
    for a in 0..m.len() {
        for b in (a + 1)..m.len() {
            pairs_by_delay.entry(m[b] - m[a]).or_default().push((m[a], m[b]));
        }
    }
    Ok(DifferenceTable { n, pairs_by_delay })
}

/// How Fred picks among several member pairs with the requested difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PairPolicy {
    #[default]
    Uniform,
    First,
}

/// Fred's answer to Bob's delay `r`.
pub fn fred_respond<R: Rng + ?Sized>(
    table: &DifferenceTable,
    component: &ComponentInfo,
    delay: usize,
    policy: PairPolicy,
    rng: &mut R,
) -> Result<DetectionRecord> {
    if delay == 0 || delay >= table.n {
        return Err(Error::param("r", "delay must satisfy 1 <= r <= n-1"));
    }
    let Some(candidates) = table.pairs(delay) else {
        return Ok(DetectionRecord::Lost);
    };
    let (i, j) = match policy {
        PairPolicy::First => candidates[0],
        PairPolicy::Uniform => candidates[rng.random_range(0..candidates.len())],
    };
    let (pi, pj) = component
        .phase(i)
        .zip(component.phase(j))
        .ok_or(Error::InvalidState("difference table does not match the component"))?;
    Ok(DetectionRecord::Detected { i, j, parity: pi ^ pj })
}

/// Everything fixed before the first round: Alice's key for this train and
/// the component Eve and Fred share.
#[derive(Debug, Clone)]
pub struct Attack1Session {
    pub seed: u64,
    pub key: KeyBits,
    pub observations: Vec<PairObservation>,
    pub component: ComponentInfo,
    pub table: DifferenceTable,
}

/// One round: Bob's delay, Fred's answer and what Alice and Eve hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Attack1Round {
    pub delay: usize,
    pub detection: DetectionRecord,
    pub alice_bit: Option<u8>,
    pub eve_bit: Option<u8>,
}

impl Attack1Session {
    /// Setup from stream 0 of `master_seed`.
    pub fn prepare(n: usize, master_seed: u64) -> Result<Self> {
        let photons = photons_for(n)?;
        let mut rng = stream_rng(master_seed, 0);
        let key = generate_key_bits(n, &mut rng)?;
        let observations = harvest(&key, photons, &mut rng)?;
        let graph: PhaseGraph = build_phase_graph(&observations, n)?;
        let component = graph
            .largest_component()
            .ok_or(Error::InvalidState("graph has no nodes"))?;
        let table = difference_table(&component, n)?;
        Ok(Attack1Session {
            seed: master_seed,
            key,
            observations,
            component,
            table,
        })
    }

    pub fn n(&self) -> usize {
        self.key.len()
    }

    /// Round `index` (0-based) uses stream `index + 1`.
    pub fn round(&self, policy: PairPolicy, index: u64) -> Result<Attack1Round> {
        let mut rng = stream_rng(self.seed, index + 1);
        let delay = rng.random_range(1..self.n());
        let detection = fred_respond(&self.table, &self.component, delay, policy, &mut rng)?;
        let (alice_bit, eve_bit) = match detection {
            DetectionRecord::Detected { i, j, .. } => {
                // Eve reads the announced pair and uses her own copy of the phases.
                let eve = self.component.phase(i).zip(self.component.phase(j)).map(|(a, b)| a ^ b);
                (Some(sift(&self.key, i, j)?), eve)
            }
            DetectionRecord::Lost => (None, None),
        };
        Ok(Attack1Round {
            delay,
            detection,
            alice_bit,
            eve_bit,
        })
    }
}

/// Session summary.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Attack1Stats {
    pub n: usize,
    pub photons: usize,
    pub component_size: usize,
    pub coverage: f64,
    pub policy: PairPolicy,
    pub rounds: u64,
    pub announced: u64,
    pub losses: u64,
    pub errors: u64,
    pub eve_correct: u64,
    pub qber: f64,
    pub loss_rate: f64,
}

impl Attack1Stats {
    pub fn from_rounds<'a>(
        session: &Attack1Session,
        policy: PairPolicy,
        rounds: impl IntoIterator<Item = &'a Attack1Round>,
    ) -> Self {
        let mut s = Attack1Stats {
            n: session.n(),
            photons: session.observations.len(),
            component_size: session.component.len(),
            coverage: session.table.coverage(),
            policy,
            rounds: 0,
            announced: 0,
            losses: 0,
            errors: 0,
            eve_correct: 0,
            qber: 0.0,
            loss_rate: 0.0,
        };
        for r in rounds {
            s.rounds += 1;
            match r.detection {
                DetectionRecord::Lost => s.losses += 1,
                DetectionRecord::Detected { parity, .. } => {
                    s.announced += 1;
                    if r.alice_bit != Some(parity) {
                        s.errors += 1;
                    }
                    if r.eve_bit.is_some() && r.eve_bit == r.alice_bit {
                        s.eve_correct += 1;
                    }
                }
            }
        }
        if s.announced > 0 {
            s.qber = s.errors as f64 / s.announced as f64;
        }
        if s.rounds > 0 {
            s.loss_rate = s.losses as f64 / s.rounds as f64;
        }
        s
    }
}

pub fn run_attack1_session(n: usize, rounds: u64, policy: PairPolicy, master_seed: u64) -> Result<Attack1Stats> {
    if rounds == 0 {
        return Err(Error::param("rounds", "must be at least 1"));
    }
    let session = Attack1Session::prepare(n, master_seed)?;
    let records = (0..rounds)
        .map(|k| session.round(policy, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(Attack1Stats::from_rounds(&session, policy, &records))
}
