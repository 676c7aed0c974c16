//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(master seed, purpose, index)`. The purpose picks the key, the index
//! picks the ChaCha stream, so trial `i` sees the same numbers no matter
//! which worker runs it or in which order trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share key material.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// The data set X that the estimator subsamples from.
    Data,
    /// One estimator trial (subsample, scaling draw).
    Trial,
    /// One full-matrix oracle trial.
    Oracle,
    /// One cell of the decay verifier.
    Decay,
    /// Column selection for the Nyström baseline.
    Nystrom,
    /// Anything else a caller wants to keep separate, tagged by a number.
    Custom(u32),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Data => 0x01,
            Purpose::Trial => 0x02,
            Purpose::Oracle => 0x03,
            Purpose::Decay => 0x04,
            Purpose::Nystrom => 0x05,
            Purpose::Custom(t) => 0x100 + u64::from(t),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent stream for `(seed, purpose, index)`.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let key = splitmix64(seed ^ splitmix64(purpose.tag()));
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(key.wrapping_add(i as u64)).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(index);
    rng
}
