//! Counter-based stream derivation.
//!
//! A stream is keyed by `(master_seed, cell, lane)` through SHA-256 and
//! selected by `replicate` as the ChaCha stream id, so every grid cell and
//! replicate owns an independent generator regardless of execution order.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededRng {
    pub master_seed: u64,
    pub cell: u64,
    pub replicate: u64,
    pub lane: u64,
}

impl SeededRng {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, cell: 0, replicate: 0, lane: 0 }
    }

    pub fn with_path(master_seed: u64, cell: u64, replicate: u64) -> Self {
        Self { master_seed, cell, replicate, lane: 0 }
    }

    pub fn cell(self, cell: u64) -> Self {
        Self { cell, ..self }
    }

    pub fn replicate(self, replicate: u64) -> Self {
        Self { replicate, ..self }
    }

    /// Sub-stream for a distinct purpose within the same replicate.
    pub fn lane(self, lane: u64) -> Self {
        Self { lane, ..self }
    }

    /// New root whose master seed is derived from this full path and `tag`;
    /// used when a replicate needs its own grid of streams.
    pub fn fork(self, tag: u64) -> Self {
        let digest = self.digest(Some(tag));
        let mut seed = [0u8; 8];
        seed.copy_from_slice(&digest[..8]);
        Self::new(u64::from_le_bytes(seed))
    }

    fn digest(&self, tag: Option<u64>) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"logit-core/stream");
        h.update(self.master_seed.to_le_bytes());
        h.update(self.cell.to_le_bytes());
        h.update(self.lane.to_le_bytes());
        if let Some(tag) = tag {
            h.update(self.replicate.to_le_bytes());
            h.update(tag.to_le_bytes());
        }
        h.finalize().into()
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn stream(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.digest(None));
        rng.set_stream(self.replicate);
        rng
    }
}
