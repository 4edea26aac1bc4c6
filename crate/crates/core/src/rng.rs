//! Seeded randomness.
//!
//! Codewords are drawn from a counter-based generator: each 64-bit block is a
//! pure function of `(seed, stream, counter)`, so any single codeword can be
//! regenerated without materializing its neighbours, and generation order
//! never changes the output. Sequential consumers (noise, subsets,
//! permutations) use ChaCha8 streams keyed by [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_MUL: u64 = 0xD1B5_4A32_D192_ED03;
const COUNTER_MUL: u64 = 0xAEF1_7502_108E_F2D9;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a parent seed with a tag (trial index, symbol index, purpose id).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix(splitmix(seed ^ GOLDEN).wrapping_add(tag.wrapping_mul(STREAM_MUL)))
}

/// ChaCha8 stream for sequential sampling, keyed by `(seed, tag)`.
pub fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: splitmix(seed ^ GOLDEN),
        }
    }

    #[inline]
    pub fn bits(&self, stream: u64, counter: u64) -> u64 {
        let s = splitmix(self.key ^ stream.wrapping_mul(STREAM_MUL));
        splitmix(splitmix(s ^ counter.wrapping_mul(COUNTER_MUL)) ^ GOLDEN)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&self, stream: u64, counter: u64) -> f64 {
        (self.bits(stream, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal pair by Box-Muller over two uniforms at counters
    /// `2j` and `2j + 1`. The first uniform is mapped to `(0, 1]` so the
    /// logarithm stays finite.
    #[inline]
    pub fn normal_pair(&self, stream: u64, j: u64) -> (f64, f64) {
        let u1 = 1.0 - self.uniform(stream, 2 * j);
        let u2 = self.uniform(stream, 2 * j + 1);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * theta.cos(), r * theta.sin())
    }
}
