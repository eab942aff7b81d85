//! Counter-based seed splitting.
//!
//! A master seed selects a ChaCha key; every trial, session or round draws
//! from its own stream, selected by index. Work can therefore be split across
//! any number of threads without changing a single sampled value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent generator for stream `index` under `master`.
pub fn stream_rng(master: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Derives a child master seed, for experiments that nest one seeded
/// procedure inside another (e.g. a session inside a scan trial).
pub fn child_seed(master: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream_rng(master, index).next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: [u64; 4] = core::array::from_fn(|_| 0);
        let mut r0 = stream_rng(7, 0);
        let mut r0b = stream_rng(7, 0);
        let mut r1 = stream_rng(7, 1);
        let x: [u64; 4] = a.map(|_| r0.next_u64());
        let y: [u64; 4] = a.map(|_| r0b.next_u64());
        let z: [u64; 4] = a.map(|_| r1.next_u64());
        assert_eq!(x, y);
        assert_ne!(x, z);
        assert_ne!(child_seed(7, 0), child_seed(7, 1));
    }
}
