//! Deterministic per-trial random streams.
//!
//! A stream is keyed by `(master_seed, stream_id)` and backed by ChaCha8, whose
//! state is the key, a 64-bit stream selector and a block counter. Any draw is
//! therefore a pure function of seed, stream id and position, which makes
//! trial-parallel runs independent of scheduling and thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_key(master_seed: u64, domain: u64) -> [u8; 32] {
    let mut state = master_seed ^ domain.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Random stream owned by a single trial.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    domain: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self::with_domain(master_seed, stream_id, 0)
    }

    fn with_domain(master_seed: u64, stream_id: u64, domain: u64) -> Self {
        let mut inner = ChaCha8Rng::from_seed(derive_key(master_seed, domain));
        inner.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            domain,
            inner,
        }
    }

    /// Independent companion stream for the same trial, selected by `tag`.
    ///
    /// Used where a construction needs draws that must not perturb the main
    /// sequence (for example lazily assigned legs).
    pub fn auxiliary(&self, tag: u64) -> Self {
        Self::with_domain(
            self.master_seed,
            self.stream_id,
            self.domain.wrapping_add(tag.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Uniform draw in (0, 1], never zero.
    #[inline]
    pub fn open_unit(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Runs `trials` independent trials, trial `i` on stream `(seed, i)`.
///
/// Results come back in trial order whatever the thread pool looks like, so
/// any reduction done afterwards is deterministic.
pub fn run_trials<T, F>(seed: u64, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut RngStream) -> T + Sync + Send,
{
    run_trial_range(seed, 0..trials, f)
}

/// Same as [`run_trials`] over an arbitrary range of trial ids.
pub fn run_trial_range<T, F>(seed: u64, ids: std::ops::Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut RngStream) -> T + Sync + Send,
{
    ids.into_par_iter()
        .map(|id| {
            let mut stream = RngStream::new(seed, id);
            f(id, &mut stream)
        })
        .collect()
}
