//! Per-trial seed derivation.
//!
//! Seeds are produced by a chain of SplitMix64 finalizers:
//! `x0 = mix(master ⊕ C0)`, `x1 = mix(x0 ⊕ (i+1)·K1)`, `x2 = mix(x1 ⊕ (j+1)·K2)`.
//! `mix` is a bijection on 64-bit words, so for a fixed master seed and sweep
//! index distinct trial indices never collide; across sweep indices collisions
//! behave like random 64-bit draws.

const C0: u64 = 0x6a09_e667_f3bc_c909;
const K1: u64 = 0x9e37_79b9_7f4a_7c15;
const K2: u64 = 0xc2b2_ae3d_27d4_eb4f;
const K3: u64 = 0x1656_67b1_9e37_79f9;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_trial_seed(master_seed: u64, sweep_index: u64, trial_index: u64) -> u64 {
    let x = splitmix64(master_seed ^ C0);
    let x = splitmix64(x ^ sweep_index.wrapping_add(1).wrapping_mul(K1));
    splitmix64(x ^ trial_index.wrapping_add(1).wrapping_mul(K2))
}

/// Independent sub-stream of a trial, e.g. one per front-end variant.
pub fn derive_stream_seed(trial_seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(trial_seed) ^ stream.wrapping_add(1).wrapping_mul(K3))
}
