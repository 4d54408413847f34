//! Deterministic splittable random number streams.
//!
//! All sampling in this crate draws from ChaCha streams addressed by
//! `(seed, chunk index)`. Generation happens in fixed-size chunks, each
//! chunk on its own stream, so chunked generation is deterministic for a
//! given seed and chunk layout no matter how chunks are scheduled. Derived
//! substreams let independent components (e.g. the Gaussian vector and the
//! Gamma subordinator of a sampler) consume disjoint streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of draws generated per chunk. Part of the reproducibility
/// contract: changing it changes every sampler's output.
pub const CHUNK: usize = 1 << 14;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A root seed from which per-chunk generators and named substreams are
/// derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for one chunk. Chunk indices select ChaCha streams, so
    /// distinct chunks never overlap.
    pub fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chunk.wrapping_add(1));
        rng
    }

    /// Independent stream for a named component.
    pub fn substream(&self, tag: u64) -> SeedStream {
        SeedStream {
            seed: splitmix64(self.seed ^ splitmix64(tag)),
        }
    }

    /// Generate `n` values, `per_draw` values per logical draw, in chunk
    /// order. The closure sees the chunk generator and the in-chunk index.
    pub fn generate<F>(&self, n: usize, mut f: F) -> Vec<f64>
    where
        F: FnMut(&mut ChaCha8Rng) -> f64,
    {
        let mut out = Vec::with_capacity(n);
        let chunks = n.div_ceil(CHUNK);
        for c in 0..chunks {
            let mut rng = self.chunk_rng(c as u64);
            let take = CHUNK.min(n - c * CHUNK);
            for _ in 0..take {
                out.push(f(&mut rng));
            }
        }
        out
    }
}
