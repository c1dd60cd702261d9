//! Deterministic random streams for experiments.
//!
//! Every draw comes from ChaCha12 keyed by the master seed, with the 64-bit
//! stream id derived from the realization index and a role tag. Realizations
//! are therefore order-independent: any subset can be generated in any order
//! (or in parallel) and produce identical values.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Roles a random stream can play inside one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Channels = 0,
    Weights = 1,
    Init = 2,
}

const STREAMS_PER_REALIZATION: u64 = 8;

/// ChaCha12 stream for `(master_seed, realization, role)`.
pub fn stream_rng(master_seed: u64, realization: u64, role: StreamRole) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&master_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(
        realization
            .wrapping_mul(STREAMS_PER_REALIZATION)
            .wrapping_add(role as u64),
    );
    rng
}

/// A plain u64 drawn from the named stream, used to seed nested generators.
pub fn derived_seed(master_seed: u64, realization: u64, role: StreamRole) -> u64 {
    use rand::RngCore;
    stream_rng(master_seed, realization, role).next_u64()
}
