//! Seeded random sources. Every generator draws from ChaCha8 seeded with the
//! user seed and switched to a stream reserved for that operation, so
//! different operations under one seed never share random numbers and
//! results are identical across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers, one per random operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Signal = 1,
    Noise = 2,
    Outliers = 3,
    Mask = 4,
    Corruption = 5,
    Split = 6,
    Experts = 7,
    Graph = 8,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// First `k` entries of a uniform random permutation of `0..n`.
pub fn choose_indices<R: rand::Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k.min(n) {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k.min(n));
    idx
}
