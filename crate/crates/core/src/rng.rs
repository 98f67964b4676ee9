//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by the run seed and selected by
//! a 64-bit stream id; the draw index is the block counter. Chunk `c` of
//! subsample `s` always reads stream `(s << 32) | c` from word 0, so the
//! numbers a chunk sees do not depend on how chunks are scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream id of chunk `chunk` in subsample `subsample`.
#[inline]
pub fn stream_id(subsample: u32, chunk: u32) -> u64 {
    ((subsample as u64) << 32) | chunk as u64
}

/// A positioned stream for `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct CounterStream {
    inner: ChaCha8Rng,
}

impl CounterStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        inner.set_word_pos(0);
        Self { inner }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Position in 32-bit words since the start of the stream.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }
}
