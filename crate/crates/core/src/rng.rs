//! Splittable deterministic random streams.
//!
//! A [`SeedStream`] is a 64-bit stream identifier. Child streams are derived
//! by hashing the parent id with a label, so any node of the
//! `master seed -> trial -> purpose -> iteration` tree can be reconstructed
//! without touching its siblings. Each id keys a ChaCha8 generator, which is
//! counter-based: draws from different ids never overlap in practice.

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    id: u64,
}

impl SeedStream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            id: mix64(master_seed ^ 0x5EED_0F5E_ED5E_ED00),
        }
    }

    /// The stream of trial `index` under `master_seed`.
    pub fn trial(master_seed: u64, index: u64) -> Self {
        Self::new(master_seed).child(index)
    }

    pub fn child(&self, label: u64) -> Self {
        Self {
            id: mix64(self.id.rotate_left(23) ^ mix64(label.wrapping_add(GOLDEN_GAMMA))),
        }
    }

    pub fn named(&self, name: &str) -> Self {
        self.child(stream_label(name))
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn rng(&self) -> StreamRng {
        let mut key = [0u8; 32];
        let mut z = self.id;
        for chunk in key.chunks_exact_mut(8) {
            z = z.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&mix64(z).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

/// Stable label for deriving a named child stream.
pub fn stream_label(name: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in name.as_bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Fills `out` with i.i.d. N(0, 1) draws, in order.
pub fn fill_standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, out: &mut [T]) {
    for v in out.iter_mut() {
        *v = standard_normal(rng);
    }
}
