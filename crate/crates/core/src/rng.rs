//! Reproducible random streams.
//!
//! Stream `(seed, id)` is ChaCha8 keyed by `seed` (expanded with
//! `SeedableRng::seed_from_u64`) with the ChaCha stream number set to `id`.
//! ChaCha is counter-based, so the output depends only on `(seed, id)` and
//! not on the platform or on how work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name of the stream derivation, echoed into reports.
pub const RNG_ALGORITHM: &str = "chacha8(seed_from_u64(seed)).set_stream(id)";

/// The random stream for `(seed, stream_id)`.
pub fn rng_stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform double in `[0, 1)` with 53 random bits.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// `i`-th element of the van der Corput sequence in `base`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}
