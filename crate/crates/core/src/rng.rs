//! Counter-based random streams keyed by (seed, stream name, index).
//!
//! A stream name is hashed together with the seed into a ChaCha key; the
//! index (usually the trial number) selects the ChaCha stream. Any
//! (seed, name, index) triple can therefore be regenerated independently of
//! how work was scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const INSTANCE_GEN: &str = "instance-gen";
pub const CONFIG_SAMPLING: &str = "config-sampling";
pub const PERMUTATION: &str = "permutation";
pub const Q_BITS: &str = "q-bits";
pub const QTILDE_BITS: &str = "qtilde-bits";
pub const ATTENUATION_BITS: &str = "attenuation-bits";
pub const SUGGESTIONS: &str = "suggestions";
pub const STATES: &str = "states";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey([u8; 32]);

impl StreamKey {
    pub fn new(seed: u64, name: &str) -> Self {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        let mut key = [0u8; 32];
        key.copy_from_slice(&h.finalize());
        StreamKey(key)
    }

    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::from_seed(self.0);
        r.set_stream(index);
        r
    }
}

pub fn stream(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    StreamKey::new(seed, name).rng(index)
}

/// Uniform draw in [0,1) at a fixed counter position of a stream, so a bit
/// attached to slot `slot` does not depend on which other slots were read.
pub fn uniform_at(rng: &mut ChaCha8Rng, slot: u64) -> f64 {
    rng.set_word_pos(slot as u128 * 2);
    rng.gen::<f64>()
}
