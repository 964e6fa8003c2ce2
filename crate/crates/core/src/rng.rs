//! Counter-addressed random streams.
//!
//! A stream is named by `(master_seed, replicate, substream)`. The generator
//! state is a hash of the triple, so every draw is a pure function of the
//! three fields and of its position in the stream. Replicates therefore
//! produce the same numbers whichever worker runs them, in whatever order.

use rand_core::SeedableRng;
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

pub type StreamRng = Pcg64Mcg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub replicate: u64,
    pub substream: u64,
}

// SplitMix64 finaliser
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, replicate: 0, substream: 0 }
    }

    pub fn with_replicate(self, replicate: u64) -> Self {
        Self { replicate, substream: 0, ..self }
    }

    pub fn with_substream(self, substream: u64) -> Self {
        Self { substream, ..self }
    }

    fn seed(&self) -> [u8; 16] {
        let h1 = mix(self.master_seed.wrapping_add(GOLDEN));
        let h2 = mix(h1 ^ self.replicate.wrapping_mul(0xd6e8_feb8_6659_fd93).wrapping_add(GOLDEN));
        let h3 = mix(h2 ^ self.substream.wrapping_mul(0xa076_1d64_78bd_642f).wrapping_add(GOLDEN));
        let h4 = mix(h3.wrapping_add(GOLDEN));
        let mut seed = [0u8; 16];
        seed[..8].copy_from_slice(&h3.to_le_bytes());
        seed[8..].copy_from_slice(&h4.to_le_bytes());
        seed
    }

    pub fn rng(&self) -> StreamRng {
        Pcg64Mcg::from_seed(self.seed())
    }
}
