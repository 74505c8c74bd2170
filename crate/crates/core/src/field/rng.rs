//! Counter-based random streams keyed by `(master seed, degree, replication)`.
//!
//! Each stream is a ChaCha20 keystream: the key is derived from the master
//! seed and the degree, the 64-bit stream id is the replication index. Any
//! replication can therefore be regenerated in isolation and in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Domain-separation tag mixed into every key.
const KEY_TAG: u64 = 0x686c_2d66_6965_6c64; // "hl-field"

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub ell: usize,
    pub replication: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, ell: usize, replication: u64) -> Self {
        Self {
            master_seed,
            ell,
            replication,
        }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&(self.ell as u64).to_le_bytes());
        key[16..24].copy_from_slice(&KEY_TAG.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(self.replication);
        rng
    }

    /// 64-bit provenance tag identifying this stream in reports.
    pub fn tag(&self) -> u64 {
        let mut h = splitmix64(self.master_seed ^ KEY_TAG);
        h = splitmix64(h ^ self.ell as u64);
        splitmix64(h ^ self.replication)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
