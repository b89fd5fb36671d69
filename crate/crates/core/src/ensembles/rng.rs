//! Splittable seed streams.
//!
//! A [`SeedStream`] is a 128-bit key. `child(i)` derives a new key from the parent key and
//! the index, so any path (trial, factor, row, column) names its own stream without
//! coordination. The key expands into a ChaCha8 generator, which is itself counter based,
//! so draws are reproducible across platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    hi: u64,
    lo: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { hi: mix64(seed ^ 0x6a09_e667_f3bc_c908), lo: mix64(seed.wrapping_add(GOLDEN)) }
    }

    /// Independent substream indexed by `index`.
    #[inline]
    pub fn child(self, index: u64) -> Self {
        let a = mix64(index.wrapping_mul(GOLDEN) ^ 0x3c6e_f372_fe94_f82b);
        let b = mix64(index.wrapping_add(0xa54f_f53a_5f1d_36f1));
        Self {
            hi: mix64(self.hi ^ a).wrapping_add(self.lo.rotate_left(17)),
            lo: mix64(self.lo.wrapping_add(b) ^ self.hi.rotate_left(41)),
        }
    }

    /// Substream at a multi-component path.
    pub fn path(self, indices: &[u64]) -> Self {
        indices.iter().fold(self, |s, &i| s.child(i))
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let words = [self.hi, self.lo, mix64(self.hi ^ self.lo), mix64(self.hi.wrapping_add(GOLDEN) ^ self.lo.rotate_left(32))];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}
