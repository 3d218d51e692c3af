//! Seeding conventions.
//!
//! Every randomized routine takes a caller-supplied generator. The default is
//! PCG-XSH-RR 64/32 (`rand_pcg::Pcg32`): 64-bit state plus a 64-bit stream
//! selector, so independent trials get distinct streams of the same seed.

use rand::SeedableRng;
use rand_pcg::Pcg32;

/// Generator used by the library when the caller does not pick one.
pub type DefaultRng = Pcg32;

/// Identity string written into benchmark metadata.
pub const DEFAULT_RNG_NAME: &str = "pcg32 (rand_pcg 0.3, XSH-RR 64/32)";

/// Streams reserved for distinct purposes under the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Generate = 1,
    Walk = 2,
    Bench = 3,
}

/// SplitMix64 finalizer, used to spread seeds over the state space.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for `seed` on the stream reserved for `purpose`.
pub fn seeded(seed: u64, purpose: Purpose) -> DefaultRng {
    Pcg32::new(mix64(seed), purpose as u64)
}

/// Generator for trial `trial` of the benchmark cell `(seed, n, d)`.
pub fn trial_stream(seed: u64, n: usize, d: usize, trial: u64) -> DefaultRng {
    let state = mix64(seed ^ mix64((n as u64) << 32 ^ d as u64));
    Pcg32::new(state, (trial << 2) | Purpose::Bench as u64)
}

/// Plain seeding for callers that only have a number.
pub fn from_seed(seed: u64) -> DefaultRng {
    Pcg32::seed_from_u64(seed)
}
