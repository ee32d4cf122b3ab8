//! Seeded randomness.
//!
//! Every random draw comes from ChaCha8 keyed by the run seed
//! (`seed_from_u64`), with a separate ChaCha stream id per purpose:
//! stream [`INIT_STREAM`] for parameter initialisation and
//! `EPOCH_STREAM_BASE + epoch` for the batch shuffle of that epoch.
//!
//! Derived draws are defined bit-for-bit so other implementations can match:
//! * a unit float is `(next_u64() >> 11) * 2^-53`, in `[0, 1)`;
//! * `below(n)` rejects `x = next_u64()` while `x >= u64::MAX - (u64::MAX % n)`
//!   and returns `x % n`;
//! * shuffling is Fisher-Yates from the last index down, swapping `i` with
//!   `below(i + 1)`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INIT_STREAM: u64 = 0;
pub const EPOCH_STREAM_BASE: u64 = 1;

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

pub fn epoch_stream(seed: u64, epoch: u64) -> ChaCha8Rng {
    stream(seed, EPOCH_STREAM_BASE + epoch)
}

#[inline]
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on `[-bound, bound)`.
#[inline]
pub fn symmetric_f64<R: RngCore>(rng: &mut R, bound: f64) -> f64 {
    -bound + 2.0 * bound * unit_f64(rng)
}

pub fn below<R: RngCore>(rng: &mut R, n: u64) -> u64 {
    assert!(n > 0, "below(0)");
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % n;
        }
    }
}

pub fn shuffle<R: RngCore, T>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
