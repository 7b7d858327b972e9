//! Deterministic derivation of sub-seeds from a master seed.
//!
//! Every randomized component takes an explicit `u64` seed. Components
//! that spawn further randomness (per-trial models, per-sample matchings,
//! per-strategy runs) derive child seeds with [`derive`] instead of
//! splitting an RNG stream, so results stay reproducible when work is
//! reordered or parallelized.

/// Mixes a master seed with a path of indices into a new seed.
///
/// Uses the SplitMix64 finalizer, folding in each path element. Distinct
/// paths of the same length give independent-looking seeds; callers are
/// responsible for keeping paths distinct (e.g. by a leading tag).
pub fn derive(master: u64, path: &[u64]) -> u64 {
    let mut state = mix(master ^ 0x9e37_79b9_7f4a_7c15);
    for &part in path {
        state = mix(state ^ mix(part.wrapping_add(0x2545_f491_4f6c_dd1d)));
    }
    state
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
