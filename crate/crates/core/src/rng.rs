// SPDX-License-Identifier: Apache-2.0

//! Counter-based random streams keyed by `(master_seed, stream_id, replicate)`.
//!
//! Every consumer of randomness derives its own ChaCha stream from a key, so
//! replicates can run on any worker in any order and still reproduce
//! bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates the purposes that draw from the same `(seed, stream, replicate)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Walk increments.
    Path,
    /// Replacement increment for step `i` of a walk.
    Resample(u64),
    /// Gaussian block of a limit-law draw.
    LimitGaussian,
    /// Brownian paths inside a limit-law draw; the index tells them apart.
    LimitBrownian(u64),
    /// Anything else, e.g. test-harness noise.
    Aux(u64),
}

impl Domain {
    fn code(self) -> (u64, u64) {
        match self {
            Domain::Path => (1, 0),
            Domain::Resample(i) => (2, i),
            Domain::LimitGaussian => (3, 0),
            Domain::LimitBrownian(i) => (4, i),
            Domain::Aux(i) => (5, i),
        }
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent ChaCha8 stream for one key.
pub fn stream_rng(master_seed: u64, stream_id: u64, replicate: u64, domain: Domain) -> ChaCha8Rng {
    let (tag, sub) = domain.code();
    let a = splitmix64(master_seed);
    let b = splitmix64(a ^ stream_id.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    let c = splitmix64(b ^ tag.wrapping_mul(0xA076_1D64_78BD_642F));
    let d = splitmix64(c ^ sub.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    let mut seed = [0u8; 32];
    for (chunk, word) in seed.chunks_exact_mut(8).zip([a, b, c, d]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(replicate);
    rng
}
