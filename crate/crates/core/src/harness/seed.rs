//! Seed derivation for drops and realizations.
//!
//! `mix_seed(base, drop, realization) = f(f(f(base) ^ drop) ^ realization)`
//! where `f` is the SplitMix64 finalizer (with its golden-ratio increment).
//! Realization 0 seeds the drop geometry and large-scale fading; realization
//! `r + 1` seeds small-scale fading and pilot noise of the `r`-th channel
//! realization. Each seed initializes a `ChaCha8Rng`.

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix_seed(base_seed: u64, drop_id: u64, realization_id: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ drop_id) ^ realization_id)
}
