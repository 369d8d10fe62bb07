use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counter-based random stream owned by exactly one chain or command.
///
/// Identical seed and identical call sequence give identical output. Named
/// child streams are derived with [`Rng::split`]; the parent is not advanced.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

/// Serializable position of an [`Rng`], stored in checkpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    pub word_pos: String,
}

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The stream obtained from `seed` under `name`.
    pub fn named(seed: u64, name: &str) -> Self {
        Rng::seed_from_u64(seed).split(name)
    }

    /// Derives an independent stream keyed by `name`. Same seed, different
    /// ChaCha stream id, so children never overlap each other or the parent.
    pub fn split(&self, name: &str) -> Rng {
        let mut inner = ChaCha8Rng::from_seed(self.inner.get_seed());
        inner.set_stream(fnv1a(self.inner.get_stream(), name.as_bytes()));
        Rng { inner }
    }

    pub fn state(&self) -> RngState {
        let seed = self
            .inner
            .get_seed()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        RngState {
            seed,
            stream: self.inner.get_stream(),
            word_pos: self.inner.get_word_pos().to_string(),
        }
    }

    pub fn from_state(state: &RngState) -> Result<Self> {
        let bad = |what: &str| Error::Checkpoint(format!("bad rng state: {what}"));
        if state.seed.len() != 64 {
            return Err(bad("seed length"));
        }
        let mut seed = [0u8; 32];
        for (i, byte) in seed.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&state.seed[2 * i..2 * i + 2], 16)
                .map_err(|_| bad("seed hex"))?;
        }
        let word_pos: u128 = state.word_pos.parse().map_err(|_| bad("word position"))?;
        let mut inner = ChaCha8Rng::from_seed(seed);
        inner.set_stream(state.stream);
        inner.set_word_pos(word_pos);
        Ok(Rng { inner })
    }
}

fn fnv1a(start: u64, bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64 ^ start;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
