//! Seed derivation.
//!
//! Every random draw descends from one command seed. A child seed is
//! `splitmix64(splitmix64(parent ^ stream) ^ index)`, with a fixed `stream`
//! constant per purpose, so restarts and targets draw independent streams
//! whatever order they run in.

/// Stream for the initial angles of unity-search restarts.
pub const RESTARTS: u64 = 0x5245_5354_4152_5453;
/// Stream for near-identity universality targets.
pub const UNIVERSALITY_TARGETS: u64 = 0x554e_4956_5452_4754;
/// Stream for Haar-random benchmark targets.
pub const BENCH_TARGETS: u64 = 0x4245_4e43_4854_4754;
/// Stream for a single Haar-random compile target.
pub const COMPILE_TARGET: u64 = 0x434f_4d50_5447_5420;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(parent: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent ^ stream) ^ index)
}
