//! Deterministic seed derivation.
//!
//! Every random stream in the crate is derived from an explicit 64-bit
//! master seed; nothing reads ambient entropy. Per-cell streams are
//! derived by seed mixing so that a sweep's results are independent of
//! scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; a full-avalanche 64-bit mix.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed for a numbered cell from the master seed.
pub fn derive_seed(master: u64, cell: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(cell.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Seeded ChaCha stream for one cell of a sweep.
pub fn cell_rng(master: u64, cell: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, cell))
}

/// Stable 64-bit hash of a byte string (FNV-1a), used for config hashes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}
